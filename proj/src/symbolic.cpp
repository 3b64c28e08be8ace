#include "horseshoe/symbolic.hpp"
#include "horseshoe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace horseshoe {

Matrix01::Matrix01(int m) : m_(m), a_(static_cast<std::size_t>(m) * m, 0) {
    if (m < 1) throw OutOfRange("matrix order must be >= 1");
}

Matrix01::Matrix01(std::initializer_list<std::initializer_list<int>> rows) {
    std::vector<std::vector<int>> r;
    for (auto& row : rows) r.emplace_back(row);
    *this = from_rows(r);
}

Matrix01 Matrix01::from_rows(const std::vector<std::vector<int>>& rows) {
    int m = static_cast<int>(rows.size());
    Matrix01 a(m);
    for (int i = 0; i < m; ++i) {
        if (static_cast<int>(rows[i].size()) != m)
            throw SchemaError("matrix row " + std::to_string(i) + " has wrong length");
        for (int j = 0; j < m; ++j) a.set(i, j, rows[i][j]);
    }
    return a;
}

void Matrix01::set(int i, int j, int value) {
    if (value != 0 && value != 1) throw SchemaError("matrix entries must be 0 or 1");
    a_[i * m_ + j] = static_cast<std::uint8_t>(value);
}

std::vector<std::vector<int>> Matrix01::rows() const {
    std::vector<std::vector<int>> r(m_, std::vector<int>(m_));
    for (int i = 0; i < m_; ++i)
        for (int j = 0; j < m_; ++j) r[i][j] = (*this)(i, j);
    return r;
}

std::string Matrix01::str() const {
    std::ostringstream os;
    os << '[';
    for (int i = 0; i < m_; ++i) {
        os << (i ? ",[" : "[");
        for (int j = 0; j < m_; ++j) os << (j ? "," : "") << (*this)(i, j);
        os << ']';
    }
    os << ']';
    return os.str();
}

namespace {

// Tarjan's algorithm; returns component id per vertex.
std::vector<int> strong_components(const Matrix01& a, int& count) {
    int m = a.order();
    std::vector<int> index(m, -1), low(m, 0), comp(m, -1), stack;
    std::vector<bool> on(m, false);
    int next = 0;
    count = 0;
    std::function<void(int)> visit = [&](int v) {
        index[v] = low[v] = next++;
        stack.push_back(v);
        on[v] = true;
        for (int w = 0; w < m; ++w) {
            if (!a(v, w)) continue;
            if (index[w] < 0) {
                visit(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            int w;
            do {
                w = stack.back();
                stack.pop_back();
                on[w] = false;
                comp[w] = count;
            } while (w != v);
            ++count;
        }
    };
    for (int v = 0; v < m; ++v)
        if (index[v] < 0) visit(v);
    return comp;
}

// Perron root of an irreducible submatrix by power iteration on B + I.
double perron_root(const Matrix01& a, const std::vector<int>& idx, double tol, long max_it) {
    int k = static_cast<int>(idx.size());
    std::vector<double> v(k, 1.0), w(k);
    double prev = 0.0;
    for (long it = 0; it < max_it; ++it) {
        double s = 0.0;
        for (int r = 0; r < k; ++r) {
            double acc = v[r];
            for (int c = 0; c < k; ++c)
                if (a(idx[r], idx[c])) acc += v[c];
            w[r] = acc;
            s += acc;
        }
        double vs = 0.0;
        for (double x : v) vs += x;
        double lambda = s / vs;
        for (int r = 0; r < k; ++r) v[r] = w[r] / s;
        if (it > 0 && std::fabs(lambda - prev) <= tol * lambda) return lambda - 1.0;
        prev = lambda;
    }
    throw NoConvergence("power iteration did not converge within " + std::to_string(max_it) +
                        " iterations");
}

}  // namespace

bool is_irreducible(const Matrix01& a) {
    int count = 0;
    strong_components(a, count);
    if (count != 1) return false;
    // a single vertex is a component on its own; it still needs a loop
    if (a.order() == 1) return a(0, 0) == 1;
    return true;
}

bool is_minimal(const Matrix01& a) {
    if (!is_irreducible(a)) throw NotIrreducible();
    int m = a.order();
    for (int i = 0; i < m; ++i) {
        int rs = 0, cs = 0;
        for (int j = 0; j < m; ++j) {
            rs += a(i, j);
            cs += a(j, i);
        }
        if (rs != 1 || cs != 1) return false;
    }
    return true;
}

double spectral_radius(const Matrix01& a, double tol, long max_iterations) {
    if (!(tol > 0)) throw OutOfRange("tol must be positive");
    // rho(A) is the max over strongly connected components, each of which is irreducible
    int count = 0;
    auto comp = strong_components(a, count);
    double rho = 0.0;
    for (int c = 0; c < count; ++c) {
        std::vector<int> idx;
        for (int v = 0; v < a.order(); ++v)
            if (comp[v] == c) idx.push_back(v);
        if (idx.size() == 1 && !a(idx[0], idx[0])) continue;
        rho = std::max(rho, perron_root(a, idx, tol, max_iterations));
    }
    return rho;
}

SubshiftVerdict classify(const Matrix01& a) {
    SubshiftVerdict v;
    v.degenerate = a.order() == 1;
    v.irreducible = is_irreducible(a);
    v.spectral_radius = spectral_radius(a);
    if (v.irreducible) {
        v.minimal = is_minimal(a);
        v.chaotic = !*v.minimal;
        if (*v.chaotic) v.entropy_lower_bound = std::log(v.spectral_radius);
    }
    return v;
}

std::vector<BigInt> count_crossing_blocks(const Matrix01& a, int n) {
    if (n < 1) throw OutOfRange("n must be >= 1");
    int m = a.order();
    // row vector of ones times A^n
    std::vector<BigInt> c(m, 1), next(m);
    for (int step = 0; step < n; ++step) {
        for (int j = 0; j < m; ++j) {
            BigInt s = 0;
            for (int k = 0; k < m; ++k)
                if (a(k, j)) s += c[k];
            next[j] = s;
        }
        c.swap(next);
    }
    return c;
}

double log_big(const BigInt& v) {
    if (v <= 0) throw OutOfRange("log of non-positive integer");
    std::size_t bits = boost::multiprecision::msb(v);
    if (bits < 900) return std::log(v.convert_to<double>());
    std::size_t shift = bits - 60;
    BigInt top = v >> shift;
    return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

std::vector<double> recurrence_entropy_limit(const Matrix01& a, int n_max, Aggregate agg) {
    if (!is_irreducible(a) || is_minimal(a)) throw NotChaotic();
    if (n_max < 2) throw OutOfRange("n_max must be >= 2");
    int m = a.order();
    std::vector<double> out;
    std::vector<BigInt> c(m, 1), next(m);
    // c holds the column sums of A^(n-1); A^0 = I has all column sums 1
    for (int n = 2; n <= n_max; ++n) {
        for (int j = 0; j < m; ++j) {
            BigInt s = 0;
            for (int k = 0; k < m; ++k)
                if (a(k, j)) s += c[k];
            next[j] = s;
        }
        c.swap(next);
        BigInt value;
        if (agg == Aggregate::MaxColumn) {
            value = *std::max_element(c.begin(), c.end());
        } else {
            BigInt lo = *std::min_element(c.begin(), c.end());
            value = lo * static_cast<int>(std::count(c.begin(), c.end(), lo));
        }
        out.push_back(log_big(value) / n);
    }
    return out;
}

std::optional<double> proposition_bound(const Matrix01& a) {
    if (!is_irreducible(a)) throw NotIrreducible();
    int m = a.order();
    long total = 0;
    bool any = false;
    for (int r = 0; r < m; ++r) {
        bool full = true;
        for (int j = 0; j < m; ++j) full = full && a(r, j);
        if (!full) continue;
        any = true;
        for (int i = 0; i < m; ++i) total += a(i, r);
    }
    if (!any) return std::nullopt;
    return 0.5 * std::log(static_cast<double>(total));
}

std::vector<std::vector<int>> enumerate_words(const Matrix01& a, int n, double budget) {
    if (n < 1) throw OutOfRange("word length must be >= 1");
    int m = a.order();
    if (std::pow(static_cast<double>(m), n) > budget)
        throw BudgetExceeded("m^n = " + std::to_string(std::pow(double(m), n)) + " exceeds budget");
    std::vector<std::vector<int>> words;
    std::vector<int> w(n);
    std::function<void(int)> extend = [&](int pos) {
        if (pos == n) {
            words.push_back(w);
            return;
        }
        for (int s = 0; s < m; ++s) {
            if (pos > 0 && !a(w[pos - 1], s)) continue;
            w[pos] = s;
            extend(pos + 1);
        }
    };
    extend(0);
    return words;
}

nlohmann::json to_json(const SubshiftVerdict& v) {
    nlohmann::json j;
    j["irreducible"] = v.irreducible;
    j["minimal"] = v.minimal ? nlohmann::json(*v.minimal) : nlohmann::json(nullptr);
    j["chaotic"] = v.chaotic ? nlohmann::json(*v.chaotic) : nlohmann::json(nullptr);
    j["spectral_radius"] = v.spectral_radius;
    j["entropy_lower_bound"] = v.entropy_lower_bound;
    if (v.degenerate) j["degenerate"] = true;
    return j;
}

nlohmann::json to_json(const Matrix01& a) { return a.rows(); }

Matrix01 matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw SchemaError("matrix must be a non-empty array of rows");
    std::vector<std::vector<int>> rows;
    for (auto& r : j) {
        if (!r.is_array()) throw SchemaError("matrix rows must be arrays");
        std::vector<int> row;
        for (auto& e : r) {
            if (!e.is_number_integer()) throw SchemaError("matrix entries must be integers 0 or 1");
            row.push_back(e.get<int>());
        }
        rows.push_back(row);
    }
    return Matrix01::from_rows(rows);
}

Matrix01 parse_matrix(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("malformed matrix: ") + e.what());
    }
    return matrix_from_json(j);
}

}  // namespace horseshoe
