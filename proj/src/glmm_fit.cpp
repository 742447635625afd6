#include "acqsens/distributions.hpp"
#include "acqsens/errors.hpp"
#include "acqsens/glmm.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace acqsens {

namespace {

constexpr double kWeightFloor = 1e-10;
constexpr double kBetaDivergenceCap = 30.0;  // abort threshold during iteration
constexpr double kSeparationBeta = 15.0;     // |beta| beyond this with flat curvature
constexpr double kSeparationSe = 10.0;

double binomial_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double e = eta[i];
        // y*eta - log(1 + exp(eta)), computed on the stable side
        ll += e > 0.0 ? (y[i] - 1.0) * e - std::log1p(std::exp(-e))
                      : y[i] * e - std::log1p(std::exp(e));
    }
    return ll;
}

struct JointDesign {
    const DesignMatrices& d;
    Eigen::SparseMatrix<double> Z;                    // all random blocks, n x q
    Eigen::SparseMatrix<double, Eigen::RowMajor> Zr;  // row access for hat diagonals
    std::vector<Eigen::Index> offsets;
    Eigen::Index q = 0;

    explicit JointDesign(const DesignMatrices& design) : d(design) {
        for (const auto& block : design.blocks) {
            offsets.push_back(q);
            q += block.Z.cols();
        }
        if (q > 0) {
            Z.resize(design.n(), q);
            std::vector<Eigen::Triplet<double>> triplets;
            for (std::size_t b = 0; b < design.blocks.size(); ++b) {
                const auto& Zb = design.blocks[b].Z;
                for (int col = 0; col < Zb.outerSize(); ++col)
                    for (Eigen::SparseMatrix<double>::InnerIterator it(Zb, col); it; ++it)
                        triplets.emplace_back(it.row(), offsets[b] + it.col(), it.value());
            }
            Z.setFromTriplets(triplets.begin(), triplets.end());
            Zr = Z;
        }
    }

    Eigen::VectorXd lambda(const std::vector<double>& sigma) const {
        Eigen::VectorXd lam(q);
        for (std::size_t b = 0; b < d.blocks.size(); ++b)
            lam.segment(offsets[b], d.blocks[b].Z.cols())
                .setConstant(sigma[b]);
        return lam;
    }
};

struct PirlsState {
    Eigen::VectorXd beta;
    Eigen::VectorXd v;          // spherical random effects (u = sigma * v)
    Eigen::VectorXd mu;
    double cond_ll = 0.0;       // conditional binomial log-likelihood
    double penalized_ll = 0.0;  // cond_ll - 0.5 ||v||^2
    double laplace_ll = 0.0;    // penalized_ll - 0.5 logdet(U'WU + I)
    double logdet = 0.0;
    Eigen::MatrixXd schur;      // X'WX - B'A^{-1}B at the mode
    bool converged = false;
    int iterations = 0;
};

// Penalized IRLS / Newton over the joint (beta, v); the penalized problem is
// strictly concave so the mode is unique.
PirlsState pirls(const JointDesign& jd, const std::vector<double>& sigma,
                 const FitOptions& opts, const Eigen::VectorXd* beta_init,
                 const Eigen::VectorXd* v_init) {
    const auto& X = jd.d.X;
    const auto& y = jd.d.y;
    const Eigen::Index n = X.rows(), p = X.cols(), q = jd.q;

    PirlsState st;
    st.beta = beta_init ? *beta_init : Eigen::VectorXd::Zero(p);
    st.v = (v_init && v_init->size() == q) ? *v_init : Eigen::VectorXd::Zero(q);
    if (!beta_init) {
        double ybar = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
        st.beta[0] = std::log(ybar / (1.0 - ybar));
    }

    Eigen::VectorXd lam = q > 0 ? jd.lambda(sigma) : Eigen::VectorXd();
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;

    auto eta_of = [&](const Eigen::VectorXd& beta, const Eigen::VectorXd& v) -> Eigen::VectorXd {
        Eigen::VectorXd eta = X * beta;
        if (q > 0) eta += jd.Z * lam.cwiseProduct(v);
        return eta;
    };
    auto pll_of = [&](const Eigen::VectorXd& beta, const Eigen::VectorXd& v) {
        return binomial_loglik(y, eta_of(beta, v)) - 0.5 * v.squaredNorm();
    };

    Eigen::VectorXd eta = eta_of(st.beta, st.v);
    double pll = binomial_loglik(y, eta) - 0.5 * st.v.squaredNorm();

    Eigen::MatrixXd C;  // A^{-1} B, kept for the Firth hat diagonal

    for (int iter = 0; iter < opts.max_inner; ++iter) {
        st.iterations = iter + 1;
        Eigen::VectorXd mu = (1.0 + (-eta.array()).exp()).inverse().matrix();
        Eigen::VectorXd w = (mu.array() * (1.0 - mu.array())).cwiseMax(kWeightFloor).matrix();

        Eigen::VectorXd resid = y - mu;
        Eigen::VectorXd g_beta = X.transpose() * resid;
        Eigen::VectorXd g_v;
        if (q > 0) g_v = lam.cwiseProduct(jd.Z.transpose() * resid) - st.v;

        // Assemble the joint Newton system.
        Eigen::MatrixXd WX = w.asDiagonal() * X;
        Eigen::MatrixXd Sxx = X.transpose() * WX;
        Eigen::MatrixXd B;  // U'WX, q x p
        if (q > 0) {
            Eigen::SparseMatrix<double> M =
                jd.Z.transpose() * w.asDiagonal() * jd.Z;  // Z'WZ
            Eigen::SparseMatrix<double> A(q, q);
            std::vector<Eigen::Triplet<double>> triplets;
            triplets.reserve(static_cast<std::size_t>(M.nonZeros()) + q);
            for (int col = 0; col < M.outerSize(); ++col)
                for (Eigen::SparseMatrix<double>::InnerIterator it(M, col); it; ++it)
                    triplets.emplace_back(it.row(), it.col(),
                                          lam[it.row()] * lam[it.col()] * it.value());
            for (Eigen::Index i = 0; i < q; ++i) triplets.emplace_back(i, i, 1.0);
            A.setFromTriplets(triplets.begin(), triplets.end());
            ldlt.compute(A);
            if (ldlt.info() != Eigen::Success)
                fail(ErrorCode::InvalidSpec, "random-effects system factorization failed");

            B = lam.asDiagonal() * (jd.Z.transpose() * WX);
            C = ldlt.solve(B);
            st.schur = Sxx - B.transpose() * C;
            st.logdet = ldlt.vectorD().array().log().sum();
        } else {
            st.schur = Sxx;
            st.logdet = 0.0;
        }

        if (opts.firth) {
            // Firth-style adjusted score: residuals shifted by h*(1/2 - mu)
            // with h the joint hat diagonal.
            Eigen::LLT<Eigen::MatrixXd> schur_llt(st.schur);
            Eigen::VectorXd h(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::VectorXd r = X.row(i).transpose();
                double hu = 0.0;
                if (q > 0) {
                    Eigen::VectorXd ui = Eigen::VectorXd::Zero(q);
                    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(jd.Zr, i);
                         it; ++it)
                        ui[it.col()] = lam[it.col()] * it.value();
                    Eigen::VectorXd Ainv_ui = ldlt.solve(ui);
                    hu = ui.dot(Ainv_ui);
                    r -= C.transpose() * ui;
                }
                double hr = r.dot(schur_llt.solve(r));
                h[i] = w[i] * (hu + hr);
            }
            Eigen::VectorXd adj = h.array() * (0.5 - mu.array());
            g_beta += X.transpose() * adj;
            if (q > 0) g_v += lam.cwiseProduct(jd.Z.transpose() * adj);
        }

        double gnorm = g_beta.lpNorm<Eigen::Infinity>();
        if (q > 0) gnorm = std::max(gnorm, g_v.lpNorm<Eigen::Infinity>());
        if (gnorm < opts.inner_tol) {
            st.converged = true;
            st.mu = mu;
            break;
        }

        Eigen::VectorXd d_beta, d_v;
        Eigen::LLT<Eigen::MatrixXd> schur_llt(st.schur);
        if (schur_llt.info() != Eigen::Success)
            fail(ErrorCode::RankDeficientDesign, "singular fixed-effects system");
        if (q > 0) {
            Eigen::VectorXd t = ldlt.solve(g_v);
            d_beta = schur_llt.solve(g_beta - B.transpose() * t);
            d_v = ldlt.solve(g_v - B * d_beta);
        } else {
            d_beta = schur_llt.solve(g_beta);
        }

        // Step halving keeps the penalized objective monotone (skipped under
        // Firth where the adjusted score is not the gradient of pll).
        double lambda_step = 1.0;
        Eigen::VectorXd beta_new, v_new;
        for (int half = 0; half < 30; ++half) {
            beta_new = st.beta + lambda_step * d_beta;
            v_new = q > 0 ? (st.v + lambda_step * d_v).eval() : st.v;
            if (opts.firth) break;
            if (pll_of(beta_new, v_new) >= pll - 1e-10) break;
            lambda_step *= 0.5;
        }
        st.beta = beta_new;
        st.v = v_new;

        if (st.beta.lpNorm<Eigen::Infinity>() > kBetaDivergenceCap && !opts.firth)
            fail(ErrorCode::CompleteSeparation,
                 "coefficients diverged during penalized IRLS");

        eta = eta_of(st.beta, st.v);
        pll = binomial_loglik(y, eta) - 0.5 * st.v.squaredNorm();
        st.mu = (1.0 + (-eta.array()).exp()).inverse().matrix();
    }

    if (st.mu.size() == 0) st.mu = (1.0 + (-eta.array()).exp()).inverse().matrix();
    st.cond_ll = binomial_loglik(y, eta);
    st.penalized_ll = st.cond_ll - 0.5 * st.v.squaredNorm();
    st.laplace_ll = st.penalized_ll - 0.5 * st.logdet;
    return st;
}

// Derivative-free simplex search (Nelder-Mead); tracks the best point ever
// evaluated so the result can only improve on the starting value.
struct SimplexResult {
    std::vector<double> x;
    double f = std::numeric_limits<double>::infinity();
    int evals = 0;
    bool converged = false;
};

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, double step, double f_tol, int max_eval) {
    const std::size_t dim = x0.size();
    SimplexResult best;

    auto eval = [&](const std::vector<double>& x) {
        double val = f(x);
        ++best.evals;
        if (val < best.f) {
            best.f = val;
            best.x = x;
        }
        return val;
    };

    std::vector<std::vector<double>> xs(dim + 1, x0);
    std::vector<double> fs(dim + 1);
    fs[0] = eval(xs[0]);
    for (std::size_t i = 0; i < dim; ++i) {
        xs[i + 1][i] += step;
        fs[i + 1] = eval(xs[i + 1]);
    }

    while (best.evals < max_eval) {
        std::vector<std::size_t> order(dim + 1);
        for (std::size_t i = 0; i <= dim; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
        std::size_t lo = order[0], hi = order[dim], second_hi = order[dim - 1];

        if (fs[hi] - fs[lo] < f_tol) {
            best.converged = true;
            break;
        }

        std::vector<double> centroid(dim, 0.0);
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == hi) continue;
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += xs[i][j];
        }
        for (double& c : centroid) c /= static_cast<double>(dim);

        auto affine = [&](double t) {
            std::vector<double> x(dim);
            for (std::size_t j = 0; j < dim; ++j)
                x[j] = centroid[j] + t * (xs[hi][j] - centroid[j]);
            return x;
        };

        std::vector<double> xr = affine(-1.0);
        double fr = eval(xr);
        if (fr < fs[lo]) {
            std::vector<double> xe = affine(-2.0);
            double fe = eval(xe);
            if (fe < fr) {
                xs[hi] = xe;
                fs[hi] = fe;
            } else {
                xs[hi] = xr;
                fs[hi] = fr;
            }
        } else if (fr < fs[second_hi]) {
            xs[hi] = xr;
            fs[hi] = fr;
        } else {
            bool outside = fr < fs[hi];
            std::vector<double> xc = affine(outside ? -0.5 : 0.5);
            double fc = eval(xc);
            if (fc < std::min(fr, fs[hi])) {
                xs[hi] = xc;
                fs[hi] = fc;
            } else {
                for (std::size_t i = 0; i <= dim; ++i) {
                    if (i == lo) continue;
                    for (std::size_t j = 0; j < dim; ++j)
                        xs[i][j] = xs[lo][j] + 0.5 * (xs[i][j] - xs[lo][j]);
                    fs[i] = eval(xs[i]);
                    if (best.evals >= max_eval) break;
                }
            }
        }
    }
    return best;
}

void check_separation(const PirlsState& st, const Eigen::MatrixXd& covariance) {
    Eigen::Index worst = 0;
    st.beta.cwiseAbs().maxCoeff(&worst);
    if (std::fabs(st.beta[worst]) > kSeparationBeta &&
        std::sqrt(std::max(0.0, covariance(worst, worst))) > kSeparationSe)
        fail(ErrorCode::CompleteSeparation,
             "coefficient " + std::to_string(worst) +
                 " diverges with vanishing curvature (quasi-separated data)");
}

} // namespace

GlmmFit fit(const DesignMatrices& design, const FitOptions& options) {
    const Eigen::Index n = design.n(), p = design.p();
    if (p == 0) fail(ErrorCode::InvalidSpec, "empty design");
    if (n < p + 1)
        fail(ErrorCode::InvalidSpec, "need at least p + 1 observations");
    for (Eigen::Index i = 0; i < n; ++i)
        if (design.y[i] != 0.0 && design.y[i] != 1.0)
            fail(ErrorCode::InvalidSpec, "response must be binary");
    bool all_same = true;
    for (Eigen::Index i = 1; i < n && all_same; ++i)
        all_same = design.y[i] == design.y[0];
    if (all_same)
        fail(ErrorCode::CompleteSeparation, "response is constant");

    JointDesign jd(design);
    const std::size_t n_blocks = design.blocks.size();

    std::vector<double> sigma(n_blocks, 0.0);
    bool outer_converged = true;

    Eigen::VectorXd warm_beta, warm_v;
    bool have_warm = false;
    int outer_evals = 0;

    auto objective = [&](const std::vector<double>& raw) {
        std::vector<double> s(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) s[i] = std::max(0.0, raw[i]);
        PirlsState st = pirls(jd, s, options, have_warm ? &warm_beta : nullptr,
                              have_warm ? &warm_v : nullptr);
        warm_beta = st.beta;
        warm_v = st.v;
        have_warm = true;
        ++outer_evals;
        return -st.laplace_ll;
    };

    if (options.fixed_variance) {
        if (options.fixed_variance->size() != n_blocks)
            fail(ErrorCode::InvalidSpec, "fixed_variance size must match random blocks");
        for (std::size_t i = 0; i < n_blocks; ++i) {
            double var = (*options.fixed_variance)[i];
            if (var < 0.0) fail(ErrorCode::InvalidSpec, "variance components must be >= 0");
            sigma[i] = std::sqrt(var);
        }
    } else if (n_blocks > 0) {
        // Baseline at zero variance; the search result never falls below it.
        double f0 = objective(std::vector<double>(n_blocks, 0.0));
        SimplexResult res =
            nelder_mead(objective, std::vector<double>(n_blocks, 0.5), 0.4,
                        options.outer_tol, options.max_outer);
        outer_converged = res.converged;
        if (res.f < f0) {
            for (std::size_t i = 0; i < n_blocks; ++i) sigma[i] = std::max(0.0, res.x[i]);
        }
    }

    // Final cold-start solve at the selected variance components.
    PirlsState st = pirls(jd, sigma, options, nullptr, nullptr);

    GlmmFit out;
    out.coef = design.coef;
    out.beta = st.beta;
    Eigen::MatrixXd cov = st.schur.inverse();
    out.covariance = 0.5 * (cov + cov.transpose());
    out.loglik = st.laplace_ll;
    out.converged = st.converged && outer_converged;
    out.n_obs = n;
    out.reference_method = design.reference_method;
    out.methods = design.methods;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const auto& block = design.blocks[b];
        std::string name = grouping_factor_name(block.factor);
        out.variance_components[name] = sigma[b] * sigma[b];
        out.n_groups[name] = static_cast<int>(block.levels.size());
        out.random_modes[name] =
            sigma[b] * st.v.segment(jd.offsets[b], block.Z.cols());
    }
    if (!options.firth) check_separation(st, out.covariance);
    return out;
}

WaldResult wald_test(const GlmmFit& fit, std::string_view coefficient) {
    int idx = fit.coef_index(coefficient);
    if (idx < 0)
        fail(ErrorCode::UnknownCoefficient,
             "no coefficient named '" + std::string(coefficient) + "'");
    double var = fit.covariance(idx, idx);
    if (var <= 0.0)
        fail(ErrorCode::ZeroVariance,
             "zero standard error for '" + std::string(coefficient) + "'");
    WaldResult r;
    r.estimate = fit.beta[idx];
    r.std_error = std::sqrt(var);
    r.z = r.estimate / r.std_error;
    r.p_two_sided = 2.0 * dist::normal_sf(std::fabs(r.z));
    return r;
}

} // namespace acqsens
