#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spargw {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define SPARGW_ERROR(NAME)                       \
    struct NAME : Error {                        \
        using Error::Error;                      \
    }

SPARGW_ERROR(DimensionMismatch);
SPARGW_ERROR(NonSymmetricRelation);
SPARGW_ERROR(NegativeWeight);
SPARGW_ERROR(EmptyDistribution);
SPARGW_ERROR(DomainError);
SPARGW_ERROR(MissingDecomposition);
SPARGW_ERROR(IndexOutOfRange);
SPARGW_ERROR(InfeasibleKernel);
SPARGW_ERROR(NumericalUnderflow);
SPARGW_ERROR(InvalidRegularizer);
SPARGW_ERROR(NonFiniteObjective);
SPARGW_ERROR(MassCollapse);
SPARGW_ERROR(InvalidGamma);
SPARGW_ERROR(ParseError);
SPARGW_ERROR(ValidationError);

#undef SPARGW_ERROR

// ---------------------------------------------------------------------------
// Distribution: marginal weight vector, simplex in balanced mode
// ---------------------------------------------------------------------------

enum class WeightMode { balanced, unbalanced };

class Distribution {
public:
    static Distribution balanced(Vector w);
    static Distribution unbalanced(Vector w);

    const Vector& weights() const { return w_; }
    WeightMode mode() const { return mode_; }
    Index size() const { return w_.size(); }
    double mass() const { return w_.sum(); }
    double operator[](Index i) const { return w_(i); }

private:
    Distribution(Vector w, WeightMode mode) : w_(std::move(w)), mode_(mode) {}

    Vector w_;
    WeightMode mode_;
};

// Tolerance for the balanced simplex constraint |sum - 1|.
constexpr double kBalancedSumTol = 1e-12;
// Tolerance for relation-matrix symmetry.
constexpr double kSymmetryTol = 1e-9;

// Throws NonSymmetricRelation / ValidationError unless C is square,
// finite, and symmetric within kSymmetryTol.
void validate_relation(const Matrix& C);

// ---------------------------------------------------------------------------
// Ground cost L(a, b), optionally decomposable as f1(a)+f2(b)-h1(a)h2(b)
// ---------------------------------------------------------------------------

enum class CostKind { l1, l2, kl, custom };

struct Decomposition {
    std::function<double(double)> f1, f2, h1, h2;
};

class GroundCost {
public:
    static GroundCost l1();
    static GroundCost l2();
    static GroundCost kl();
    static GroundCost custom(std::function<double(double, double)> fn,
                             std::optional<Decomposition> decomp = std::nullopt);

    CostKind kind() const { return kind_; }
    bool has_decomposition() const { return decomp_.has_value(); }

    // Throws MissingDecomposition when none was declared.
    const Decomposition& decomposition() const;

    double operator()(double a, double b) const;

private:
    GroundCost(CostKind kind, std::function<double(double, double)> fn,
               std::optional<Decomposition> decomp)
        : kind_(kind), fn_(std::move(fn)), decomp_(std::move(decomp)) {}

    CostKind kind_;
    std::function<double(double, double)> fn_;  // only for custom
    std::optional<Decomposition> decomp_;
};

double eval_cost(const GroundCost& L, double a, double b);

// ---------------------------------------------------------------------------
// Problem instance
// ---------------------------------------------------------------------------

struct Problem {
    Distribution a, b;
    Matrix cx, cy;

    Index m() const { return a.size(); }
    Index n() const { return b.size(); }
};

// Checks dimensions, symmetry, and mode consistency; returns the instance.
Problem validate_problem(Distribution a, Distribution b, Matrix cx, Matrix cy);

// Re-runs the same checks on an already-assembled instance.
void validate_problem(const Problem& p);

// ---------------------------------------------------------------------------
// Sparse matrix over a fixed index set (couplings and kernels share supports)
// ---------------------------------------------------------------------------

// Coordinate storage sorted lexicographically by (row, col) with unique keys.
// Values may be zero: the support is structural and never shrinks, which is
// what keeps sparse kernels and the couplings scaled from them aligned.
struct SparseCoo {
    Index rows = 0, cols = 0;
    std::vector<Index> row;
    std::vector<Index> col;
    std::vector<double> val;

    Index nnz() const { return static_cast<Index>(val.size()); }
    double sum() const;
    Vector row_marginal() const;
    Vector col_marginal() const;
    Matrix to_dense() const;
};

// Builds a SparseCoo from possibly unsorted, possibly duplicated entries;
// duplicates are summed. Throws IndexOutOfRange for entries off the grid.
SparseCoo make_sparse(Index rows, Index cols, std::vector<Index> r,
                      std::vector<Index> c, std::vector<double> v);

// ---------------------------------------------------------------------------
// Deterministic RNG
// ---------------------------------------------------------------------------

// mt19937_64 is pinned by the standard; the value mappings below are written
// out explicitly because std:: distributions are implementation-defined and
// the solvers promise bitwise reproducibility per seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; the spare draw is cached.
    double normal();

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace spargw
