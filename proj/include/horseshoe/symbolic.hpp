#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace horseshoe {

using BigInt = boost::multiprecision::cpp_int;

// Square 0/1 matrix, row-major.
class Matrix01 {
public:
    Matrix01() = default;
    explicit Matrix01(int m);
    Matrix01(std::initializer_list<std::initializer_list<int>> rows);
    static Matrix01 from_rows(const std::vector<std::vector<int>>& rows);

    int order() const { return m_; }
    int operator()(int i, int j) const { return a_[i * m_ + j]; }
    void set(int i, int j, int value);

    bool operator==(const Matrix01& o) const { return m_ == o.m_ && a_ == o.a_; }

    std::vector<std::vector<int>> rows() const;
    std::string str() const;

private:
    int m_ = 0;
    std::vector<std::uint8_t> a_;
};

struct SubshiftVerdict {
    bool irreducible = false;
    std::optional<bool> minimal;  // empty when reducible
    std::optional<bool> chaotic;
    double spectral_radius = 0.0;
    double entropy_lower_bound = 0.0;
    bool degenerate = false;  // order 1
};

bool is_irreducible(const Matrix01& a);
bool is_minimal(const Matrix01& a);
double spectral_radius(const Matrix01& a, double tol = 1e-12, long max_iterations = 1000000);
SubshiftVerdict classify(const Matrix01& a);

// Column sums of A^n.
std::vector<BigInt> count_crossing_blocks(const Matrix01& a, int n);

// How the per-step count of crossing blocks is read off the column sums of A^(n-1).
enum class Aggregate {
    MinColumnFamily,  // minimum column sum times its multiplicity (2 y_{n-1} for the Chen matrix)
    MaxColumn,        // largest column sum (x_{n-1} for [[1,1],[1,0]])
};

// b_n = ln(aggregate(A^(n-1))) / n for n = 2..n_max.
std::vector<double> recurrence_entropy_limit(const Matrix01& a, int n_max,
                                             Aggregate agg = Aggregate::MinColumnFamily);

std::optional<double> proposition_bound(const Matrix01& a);

std::vector<std::vector<int>> enumerate_words(const Matrix01& a, int n, double budget = 1e6);

// Natural log of a positive big integer, accurate for values beyond double range.
double log_big(const BigInt& v);

nlohmann::json to_json(const SubshiftVerdict& v);
nlohmann::json to_json(const Matrix01& a);
Matrix01 matrix_from_json(const nlohmann::json& j);
Matrix01 parse_matrix(const std::string& text);

}  // namespace horseshoe
