#include "spargw/spar_solvers.hpp"

#include "spargw/contraction.hpp"
#include "spargw/sinkhorn.hpp"
#include "solver_detail.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace spargw {

namespace {

void check_probabilities(const Matrix& P) {
    if (P.rows() < 1 || P.cols() < 1)
        throw ValidationError("probability matrix is empty");
    if (!P.allFinite() || (P.array() < 0.0).any())
        throw ValidationError("sampling probabilities must be finite and non-negative");
    // Summation order perturbs the total by roughly one ulp per entry, so the
    // acceptable deviation grows with the matrix size.
    double total = P.sum();
    double tol = std::max(1e-12, 4.0 * std::numeric_limits<double>::epsilon() *
                                     static_cast<double>(P.size()));
    if (std::abs(total - 1.0) > tol)
        throw ValidationError("sampling probabilities sum to " + std::to_string(total) +
                              ", expected 1 within " + std::to_string(tol));
}

Matrix map_matrix(const Matrix& C, const std::function<double(double)>& fn) {
    Matrix out(C.rows(), C.cols());
    for (Index j = 0; j < C.cols(); ++j)
        for (Index i = 0; i < C.rows(); ++i) out(i, j) = fn(C(i, j));
    return out;
}

// Inverse-probability weight each kernel entry carries. Multiplicities from
// repeated iid draws are folded in here (the literal variant keeps one unit
// per distinct cell instead).
std::vector<double> importance_adjustment(const SamplingPlan& plan, bool literal_dedup) {
    std::vector<double> adj(plan.multiplicity.size(), 1.0);
    if (plan.mode == SampleMode::full_deterministic) return adj;
    const double s = static_cast<double>(plan.s);
    for (std::size_t k = 0; k < adj.size(); ++k) {
        double p = plan.P(plan.row[k], plan.col[k]);
        if (plan.mode == SampleMode::iid_with_replacement)
            adj[k] = (literal_dedup ? 1.0 : plan.multiplicity[k]) / (s * p);
        else
            adj[k] = 1.0 / std::min(1.0, s * p);
    }
    return adj;
}

// Zero-valued sparse matrix over the plan's cells. Everything in the solver
// loop lives on this one support.
SparseCoo support_skeleton(const SamplingPlan& plan, Index m, Index n) {
    SparseCoo t;
    t.rows = m;
    t.cols = n;
    t.row = plan.row;
    t.col = plan.col;
    t.val.assign(plan.row.size(), 0.0);
    return t;
}

// Entrywise dot product of two matrices sharing the same support.
double support_dot(const SparseCoo& x, const SparseCoo& y) {
    double acc = 0.0;
    for (std::size_t k = 0; k < x.val.size(); ++k) acc += x.val[k] * y.val[k];
    return acc;
}

// Footprint model: the two relation matrices and the probability matrix stay
// dense; per sampled cell the solver keeps two indices and the plan, kernel,
// cost, and adjustment values (plus one fused slice and the dense feature
// relation when fused).
std::size_t spar_peak_bytes(Index m, Index n, Index nnz, bool fused) {
    std::size_t dense = static_cast<std::size_t>(m) * m + static_cast<std::size_t>(n) * n +
                        static_cast<std::size_t>(m) * n;
    if (fused) dense += static_cast<std::size_t>(m) * n;
    std::size_t per_entry = static_cast<std::size_t>(nnz) * (fused ? 7 : 6);
    return 8 * (dense + per_entry);
}

GwResult spar_core(const Problem& p, const GroundCost& L, const SolverConfig& cfg, const Matrix* M,
                   double alpha, long s, SampleMode mode, std::uint64_t seed) {
    detail::WallClock clock;
    validate_problem(p);
    validate_config(cfg);
    const bool quad_active = M == nullptr || alpha > 0.0;
    const bool fused_active = M != nullptr && alpha < 1.0;

    const Vector& a = p.a.weights();
    const Vector& b = p.b.weights();

    Matrix P = gw_sampling_probabilities(p.a, p.b);
    SamplingPlan plan = draw_sample(P, s, mode, seed);
    std::vector<double> adj = importance_adjustment(plan, cfg.ignore_draw_multiplicity);

    SparseCoo T = support_skeleton(plan, p.m(), p.n());
    for (std::size_t k = 0; k < T.val.size(); ++k) T.val[k] = a(T.row[k]) * b(T.col[k]);

    std::vector<double> mvals;
    if (M != nullptr) {
        mvals.resize(T.val.size());
        for (std::size_t k = 0; k < mvals.size(); ++k) mvals[k] = (*M)(T.row[k], T.col[k]);
    }

    GwResult out;
    SinkhornOptions sopts{cfg.sinkhorn_early_exit};
    SparseCoo quad = support_skeleton(plan, p.m(), p.n());
    auto objective = [&](const SparseCoo& plan_now) {
        double val = 0.0;
        if (quad_active) {
            double q = support_dot(quad, plan_now);
            val = fused_active ? alpha * q : q;
        }
        if (fused_active) {
            double f = 0.0;
            for (std::size_t k = 0; k < plan_now.val.size(); ++k) f += mvals[k] * plan_now.val[k];
            val += (1.0 - alpha) * f;
        }
        return val;
    };

    SparseCoo K = support_skeleton(plan, p.m(), p.n());
    const double inf = std::numeric_limits<double>::infinity();
    for (long r = 0; r < cfg.outer; ++r) {
        if (quad_active) quad = contract_sparse(p.cx, p.cy, L, T);
        double obj = objective(T);
        detail::check_objective_finite(obj);
        out.objective_trace.push_back(obj);

        for (std::size_t k = 0; k < K.val.size(); ++k) {
            double c;
            if (!fused_active)
                c = quad.val[k];
            else if (!quad_active)
                c = mvals[k];
            else
                c = alpha * quad.val[k] + (1.0 - alpha) * mvals[k];
            // A cost of exactly zero means the sampled contraction never
            // reached this cell; treat it as blocked rather than free.
            if (c == 0.0) c = inf;
            double kv = std::exp(-c / cfg.eps) * adj[k];
            if (cfg.reg == Regularizer::proximal_kl) kv *= T.val[k];
            K.val[k] = kv;
        }
        T = sinkhorn_balanced(a, b, K, cfg.inner, sopts);
        if (cfg.record_plans) out.plan_trace.push_back(T.to_dense());
    }

    if (quad_active) quad = contract_sparse(p.cx, p.cy, L, T);
    double final_obj = objective(T);
    out.objective_trace.push_back(final_obj);
    out.distance = detail::finalize_distance(final_obj);
    out.plan = std::move(T);
    out.peak_matrix_bytes = spar_peak_bytes(p.m(), p.n(), plan.nnz(), M != nullptr);
    out.wall_seconds = clock.seconds();
    return out;
}

}  // namespace

Matrix gw_sampling_probabilities(const Distribution& a, const Distribution& b) {
    if (a.mode() != WeightMode::balanced || b.mode() != WeightMode::balanced)
        throw ValidationError("sampling design for balanced plans needs balanced marginals");
    Vector sa = a.weights().array().sqrt();
    Vector sb = b.weights().array().sqrt();
    return (sa * sb.transpose()) / (sa.sum() * sb.sum());
}

Matrix ugw_sampling_probabilities(const Distribution& a, const Distribution& b, const Matrix& cx,
                                  const Matrix& cy, const GroundCost& L, double lambda, double eps,
                                  bool allow_large_naive) {
    validate_relation(cx);
    validate_relation(cy);
    if (a.size() != cx.rows() || b.size() != cy.rows())
        throw DimensionMismatch("marginal sizes do not match the relation matrices");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw InvalidRegularizer("lambda must be positive and finite");
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw InvalidRegularizer("epsilon must be positive and finite");
    const Vector& aw = a.weights();
    const Vector& bw = b.weights();
    if ((aw.array() <= 0.0).any() || (bw.array() <= 0.0).any())
        throw ValidationError("unbalanced marginals must be strictly positive");

    // Initial plan a b' / sqrt(m(a) m(b)) factored as u w'.
    const double mass = std::sqrt(aw.sum() * bw.sum());
    const double root = std::sqrt(mass);
    Vector u = aw / root;
    Vector w = bw / root;
    Vector mu = u * w.sum();
    Vector nu = w * u.sum();

    // Quadratic contraction at a rank-one plan: the decomposition collapses it
    // to two matrix-vector products and one outer product.
    Matrix t0 = u * w.transpose();
    Matrix cost;
    if (L.has_decomposition()) {
        const Decomposition& d = L.decomposition();
        Vector row_part = map_matrix(cx, d.f1) * mu;
        Vector col_part = map_matrix(cy, d.f2) * nu;
        Vector g1 = map_matrix(cx, d.h1) * u;
        Vector g2 = map_matrix(cy, d.h2) * w;
        cost = row_part.replicate(1, bw.size());
        cost += col_part.transpose().replicate(aw.size(), 1);
        cost.noalias() -= g1 * g2.transpose();
    } else {
        if (std::max(aw.size(), bw.size()) > 1000 && !allow_large_naive)
            throw ValidationError(
                "non-decomposable cost needs the naive quartic contraction to build the sampling "
                "design; refusing above 1000 points (set allow_large_naive to override)");
        cost = contract_naive(cx, cy, L, t0);
    }
    double offset = detail::ugw_cost_offset(mu, nu, aw, bw, lambda);

    Matrix K = ((-(cost.array() + offset) / (eps * mass)).exp() * t0.array()).matrix();

    const double p1 = lambda / (2.0 * lambda + eps);
    const double p2 = eps / (2.0 * lambda + eps);
    Matrix raw = ((aw * bw.transpose()).array().pow(p1) * K.array().pow(p2)).matrix();
    double total = raw.sum();
    if (!(total > 0.0) || !std::isfinite(total))
        throw NumericalUnderflow("sampling design normalizer came out as " +
                                 std::to_string(total));
    return raw / total;
}

SamplingPlan draw_sample(const Matrix& P, long s, SampleMode mode, std::uint64_t seed) {
    check_probabilities(P);
    if (mode != SampleMode::full_deterministic && s < 1)
        throw ValidationError("sample budget must be at least 1");

    const Index m = P.rows(), n = P.cols();
    SamplingPlan plan;
    plan.P = P;
    plan.s = s;
    plan.mode = mode;
    plan.seed = seed;

    if (mode == SampleMode::full_deterministic) {
        plan.row.reserve(static_cast<std::size_t>(m) * n);
        plan.col.reserve(static_cast<std::size_t>(m) * n);
        plan.multiplicity.assign(static_cast<std::size_t>(m) * n, 1.0);
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < n; ++j) {
                plan.row.push_back(i);
                plan.col.push_back(j);
            }
        return plan;
    }

    Rng rng(seed);
    if (mode == SampleMode::iid_with_replacement) {
        // Categorical draws by inverse CDF over cells in row-major order.
        const long long cells = static_cast<long long>(m) * n;
        std::vector<double> cum(cells);
        double acc = 0.0;
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < n; ++j) {
                acc += P(i, j);
                cum[static_cast<std::size_t>(i) * n + j] = acc;
            }
        std::vector<long long> draws(static_cast<std::size_t>(s));
        for (long d = 0; d < s; ++d) {
            double x = rng.uniform() * acc;
            long long idx = std::upper_bound(cum.begin(), cum.end(), x) - cum.begin();
            if (idx >= cells) idx = cells - 1;
            while (idx > 0 && P(static_cast<Index>(idx / n), static_cast<Index>(idx % n)) == 0.0)
                --idx;
            draws[static_cast<std::size_t>(d)] = idx;
        }
        std::sort(draws.begin(), draws.end());
        for (std::size_t k = 0; k < draws.size();) {
            std::size_t e = k;
            while (e < draws.size() && draws[e] == draws[k]) ++e;
            plan.row.push_back(static_cast<Index>(draws[k] / n));
            plan.col.push_back(static_cast<Index>(draws[k] % n));
            plan.multiplicity.push_back(static_cast<double>(e - k));
            k = e;
        }
    } else {
        // One independent coin per cell with inclusion chance min(1, s P).
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < n; ++j) {
                double keep = std::min(1.0, static_cast<double>(s) * P(i, j));
                if (rng.uniform() < keep) {
                    plan.row.push_back(i);
                    plan.col.push_back(j);
                    plan.multiplicity.push_back(1.0);
                }
            }
    }
    return plan;
}

SparseCoo sparsify_kernel_poisson(const Matrix& K, const SamplingPlan& plan) {
    if (plan.mode != SampleMode::poisson)
        throw ValidationError("kernel subsampling expects a poisson-mode plan");
    if (K.rows() != plan.P.rows() || K.cols() != plan.P.cols())
        throw DimensionMismatch("kernel shape does not match the sampling design");
    if (!K.allFinite() || (K.array() < 0.0).any())
        throw ValidationError("kernel entries must be finite and non-negative");
    SparseCoo out;
    out.rows = K.rows();
    out.cols = K.cols();
    out.row = plan.row;
    out.col = plan.col;
    out.val.resize(plan.row.size());
    for (std::size_t k = 0; k < out.val.size(); ++k) {
        double keep =
            std::min(1.0, static_cast<double>(plan.s) * plan.P(plan.row[k], plan.col[k]));
        out.val[k] = K(plan.row[k], plan.col[k]) / keep;
    }
    return out;
}

GwResult solve_spar_gw(const Problem& problem, const GroundCost& L, const SolverConfig& cfg,
                       long s, SampleMode mode, std::uint64_t seed) {
    return spar_core(problem, L, cfg, nullptr, 1.0, s, mode, seed);
}

GwResult solve_spar_fgw(const Problem& problem, const Matrix& M, const GroundCost& L, double alpha,
                        const SolverConfig& cfg, long s, SampleMode mode, std::uint64_t seed) {
    if (M.rows() != problem.m() || M.cols() != problem.n())
        throw DimensionMismatch("feature relation matrix shape does not match the problem");
    if (!M.allFinite() || (M.array() < 0.0).any())
        throw ValidationError("feature relation matrix must be finite and non-negative");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw ValidationError("alpha must lie in [0, 1]");
    return spar_core(problem, L, cfg, &M, alpha, s, mode, seed);
}

GwResult solve_spar_ugw(const Problem& problem, const GroundCost& L, double lambda,
                        const SolverConfig& cfg, long s, SampleMode mode, std::uint64_t seed) {
    detail::WallClock clock;
    validate_problem(problem);
    validate_config(cfg);
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw InvalidRegularizer("lambda must be positive and finite");
    const Vector& a = problem.a.weights();
    const Vector& b = problem.b.weights();
    if ((a.array() <= 0.0).any() || (b.array() <= 0.0).any())
        throw ValidationError("unbalanced marginals must be strictly positive");

    Matrix P = ugw_sampling_probabilities(problem.a, problem.b, problem.cx, problem.cy, L, lambda,
                                          cfg.eps, cfg.allow_large_naive);
    SamplingPlan plan = draw_sample(P, s, mode, seed);
    std::vector<double> adj = importance_adjustment(plan, cfg.ignore_draw_multiplicity);

    const double denom = std::sqrt(a.sum() * b.sum());
    SparseCoo T = support_skeleton(plan, problem.m(), problem.n());
    for (std::size_t k = 0; k < T.val.size(); ++k) T.val[k] = a(T.row[k]) * b(T.col[k]) / denom;

    GwResult out;
    SinkhornOptions sopts{cfg.sinkhorn_early_exit};
    auto objective = [&](const SparseCoo& quad, const SparseCoo& plan_now) {
        Vector mu = plan_now.row_marginal();
        Vector nu = plan_now.col_marginal();
        return support_dot(quad, plan_now) + lambda * detail::kl_tensor_product(mu, a) +
               lambda * detail::kl_tensor_product(nu, b);
    };

    SparseCoo quad, K = support_skeleton(plan, problem.m(), problem.n());
    const double inf = std::numeric_limits<double>::infinity();
    for (long r = 0; r < cfg.outer; ++r) {
        double mass = T.sum();
        if (!(mass > 0.0) || !std::isfinite(mass))
            throw MassCollapse("plan mass reached " + std::to_string(mass));
        double eps_bar = cfg.eps * mass;
        double lambda_bar = lambda * mass;

        quad = contract_sparse(problem.cx, problem.cy, L, T);
        double obj = objective(quad, T);
        detail::check_objective_finite(obj);
        out.objective_trace.push_back(obj);

        Vector mu = T.row_marginal();
        Vector nu = T.col_marginal();
        double offset = detail::ugw_cost_offset(mu, nu, a, b, lambda);
        for (std::size_t k = 0; k < K.val.size(); ++k) {
            double c = quad.val[k] + offset;
            // Same blocked-cell rule as the balanced loop.
            if (c == 0.0) c = inf;
            double kv = std::exp(-c / eps_bar) * adj[k];
            if (cfg.reg == Regularizer::proximal_kl) kv *= T.val[k];
            K.val[k] = kv;
        }
        SparseCoo next = sinkhorn_unbalanced(a, b, K, lambda_bar, eps_bar, cfg.inner, sopts);
        double next_mass = next.sum();
        if (!(next_mass > 0.0) || !std::isfinite(next_mass))
            throw MassCollapse("plan mass reached " + std::to_string(next_mass));
        double scale = std::sqrt(mass / next_mass);
        for (double& v : next.val) v *= scale;
        T = std::move(next);
        if (cfg.record_plans) out.plan_trace.push_back(T.to_dense());
    }

    quad = contract_sparse(problem.cx, problem.cy, L, T);
    double final_obj = objective(quad, T);
    out.objective_trace.push_back(final_obj);
    out.distance = detail::finalize_distance(final_obj);
    out.plan = std::move(T);
    // The design-time kernel adds one more dense m x n block to the footprint.
    out.peak_matrix_bytes = spar_peak_bytes(problem.m(), problem.n(), plan.nnz(), false) +
                            8 * static_cast<std::size_t>(problem.m()) * problem.n();
    out.wall_seconds = clock.seconds();
    return out;
}

}  // namespace spargw
