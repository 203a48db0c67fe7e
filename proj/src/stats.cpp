#include "gazenet/stats.hpp"
#include "gazenet/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace gazenet::stats {

// ---- distributions ----------------------------------------------------------

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double incbeta_cf(double a, double b, double x) {
    const double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return h;
}

} // namespace

double incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw NumericalError("incomplete_beta: a,b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    const double front = std::exp(a * std::log(x) + b * std::log(1.0 - x) - lbeta);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * incbeta_cf(a, b, x) / a;
    return 1.0 - front * incbeta_cf(b, a, 1.0 - x) / b;
}

double f_sf(double x, double d1, double d2) {
    if (x < 0.0) throw NumericalError("f_sf: x must be >= 0");
    if (d1 < 1.0 || d2 < 1.0) throw NumericalError("f_sf: degrees of freedom must be >= 1");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    // P(F > x) = I_{d2/(d2 + d1 x)}(d2/2, d1/2), the complement form kept for
    // accuracy at small tail probabilities.
    const double u = d2 / (d2 + d1 * x);
    return incomplete_beta(d2 / 2.0, d1 / 2.0, u);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / M_SQRT2); }

AnovaCore oneway_anova(const std::vector<std::vector<double>>& groups) {
    const int k = static_cast<int>(groups.size());
    if (k < 2) throw ValidationError("anova: need at least 2 groups");
    int n = 0;
    double grand_sum = 0.0;
    for (const auto& g : groups) {
        if (g.empty()) throw ValidationError("anova: empty group");
        n += static_cast<int>(g.size());
        grand_sum += std::accumulate(g.begin(), g.end(), 0.0);
    }
    if (n <= k) throw ValidationError("anova: total N must exceed the group count");
    const double grand_mean = grand_sum / n;

    double ssb = 0.0, ssw = 0.0;
    for (const auto& g : groups) {
        const double mean = std::accumulate(g.begin(), g.end(), 0.0) / g.size();
        ssb += g.size() * (mean - grand_mean) * (mean - grand_mean);
        for (double v : g) ssw += (v - mean) * (v - mean);
    }

    AnovaCore res;
    res.df_between = k - 1;
    res.df_within = n - k;
    if (ssw <= 0.0) {
        if (ssb <= 0.0) {
            res.all_identical = true; // F undefined; reported as F=0, p=1
            res.f = 0.0;
            res.p = 1.0;
        } else {
            res.infinite_f = true;
            res.f = std::numeric_limits<double>::infinity();
            res.p = 0.0;
        }
        return res;
    }
    res.f = (ssb / res.df_between) / (ssw / res.df_within);
    res.p = f_sf(res.f, res.df_between, res.df_within);
    return res;
}

// ---- design construction ----------------------------------------------------

const std::vector<std::string>& lmm_predictors() {
    static const std::vector<std::string> p = {
        "time",          "stationary_entropy", "transition_entropy", "n_nodes",
        "n_edges",       "avg_degree",         "avg_betweenness",    "avg_closeness",
        "avg_pagerank",  "density",            "reciprocity",        "node_connectivity"};
    return p;
}

std::string lmm_display_name(const std::string& key) {
    static const std::map<std::string, std::string> names = {
        {"intercept", "Intercept"},
        {"time", "Time"},
        {"stationary_entropy", "Stationary Entropy"},
        {"transition_entropy", "Transition Entropy"},
        {"n_nodes", "Number of Nodes"},
        {"n_edges", "Number of Edges"},
        {"avg_degree", "Average Degree Centrality"},
        {"avg_betweenness", "Average Betweenness Centrality"},
        {"avg_closeness", "Average Closeness Centrality"},
        {"avg_pagerank", "Average PageRank"},
        {"density", "Density"},
        {"reciprocity", "Reciprocity"},
        {"node_connectivity", "Node Connectivity"}};
    auto it = names.find(key);
    return it == names.end() ? key : it->second;
}

MixedDesign build_design(const std::vector<TrialRow>& rows, const DesignOptions& opts) {
    for (const auto& d : opts.drop_predictors) {
        const auto& preds = lmm_predictors();
        if (std::find(preds.begin(), preds.end(), d) == preds.end())
            throw ValidationError("unknown predictor in drop list: " + d);
    }
    std::vector<std::string> keep;
    for (const auto& p : lmm_predictors())
        if (std::find(opts.drop_predictors.begin(), opts.drop_predictors.end(), p) ==
            opts.drop_predictors.end())
            keep.push_back(p);

    MixedDesign des;
    std::vector<const TrialRow*> used;
    for (const auto& r : rows) {
        if (!r.bfd.has_value()) {
            des.deletion_report.push_back(r.key.participant_id + "/s" +
                                          std::to_string(r.key.semester) + "/e" +
                                          std::to_string(r.key.session_index) + "/o" +
                                          std::to_string(r.key.opt_index) + ": no bfd score");
            continue;
        }
        if (r.metrics.degenerate) {
            des.deletion_report.push_back(r.key.participant_id + "/s" +
                                          std::to_string(r.key.semester) + "/e" +
                                          std::to_string(r.key.session_index) + "/o" +
                                          std::to_string(r.key.opt_index) +
                                          ": degenerate metric vector");
            continue;
        }
        used.push_back(&r);
    }
    if (used.empty()) throw ValidationError("no usable rows for the mixed model");

    // Stable group order: participants in order of first appearance of the
    // (already trial-sorted) rows.
    std::map<std::string, int> group_of;
    for (const auto* r : used)
        if (!group_of.count(r->key.participant_id)) {
            int id = static_cast<int>(group_of.size());
            group_of[r->key.participant_id] = id;
            des.group_ids.push_back(r->key.participant_id);
        }
    // Rows must be grouped contiguously by participant: sort by (group, key).
    std::stable_sort(used.begin(), used.end(), [&](const TrialRow* a, const TrialRow* b) {
        int ga = group_of[a->key.participant_id], gb = group_of[b->key.participant_id];
        if (ga != gb) return ga < gb;
        return a->key < b->key;
    });

    const int n = static_cast<int>(used.size());
    const int p = 1 + static_cast<int>(keep.size());
    des.y.resize(n);
    des.X.resize(n, p);
    des.fixed_names.push_back("intercept");
    for (const auto& k : keep) des.fixed_names.push_back(k);

    for (int i = 0; i < n; ++i) {
        const auto& r = *used[i];
        des.y(i) = *r.bfd;
        des.X(i, 0) = 1.0;
        for (std::size_t j = 0; j < keep.size(); ++j) {
            if (keep[j] == "time")
                des.X(i, 1 + j) = static_cast<double>(r.key.ordered_index);
            else
                des.X(i, 1 + j) = metrics::metric_value(r.metrics, keep[j]);
        }
    }
    if (opts.standardize) {
        for (int j = 1; j < p; ++j) {
            const double mean = des.X.col(j).mean();
            const double sd =
                std::sqrt((des.X.col(j).array() - mean).square().sum() / des.X.rows());
            if (sd > 0.0) des.X.col(j) = (des.X.col(j).array() - mean) / sd;
        }
    }

    // Random intercept + semester slope per participant.
    des.re_names = {"intercept", "semester"};
    int start = 0;
    for (std::size_t g = 0; g < des.group_ids.size(); ++g) {
        int size = 0;
        while (start + size < n && group_of[used[start + size]->key.participant_id] ==
                                       static_cast<int>(g))
            ++size;
        Eigen::MatrixXd Zg(size, 2);
        for (int i = 0; i < size; ++i) {
            Zg(i, 0) = 1.0;
            Zg(i, 1) = static_cast<double>(used[start + i]->key.semester);
        }
        des.Z.push_back(std::move(Zg));
        des.group_start.push_back(start);
        des.group_size.push_back(size);
        start += size;
    }

    // Rank check; name the redundant columns.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(des.X);
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    if (rank < p) {
        const auto perm = qr.colsPermutation().indices();
        std::vector<std::string> redundant;
        for (int j = rank; j < p; ++j) redundant.push_back(des.fixed_names[perm[j]]);
        std::string msg = "design matrix is rank-deficient; redundant column(s):";
        for (const auto& c : redundant) msg += " " + c;
        msg += " (use the predictor drop list)";
        throw ValidationError(msg);
    }
    return des;
}

// ---- REML -------------------------------------------------------------------

namespace {

int theta_dim(int q) { return q * (q + 1) / 2; }

// Lower-triangular factor from log-Cholesky parameters, column-major order
// with log-scaled diagonal.
Eigen::MatrixXd theta_to_L(const Eigen::VectorXd& theta, int q) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(q, q);
    int idx = 0;
    for (int j = 0; j < q; ++j)
        for (int i = j; i < q; ++i) {
            L(i, j) = (i == j) ? std::exp(theta(idx)) : theta(idx);
            ++idx;
        }
    return L;
}

// dL/dtheta_k as a (sparse) one-entry matrix.
Eigen::MatrixXd theta_basis(const Eigen::VectorXd& theta, int q, int k) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(q, q);
    int idx = 0;
    for (int j = 0; j < q; ++j)
        for (int i = j; i < q; ++i) {
            if (idx == k) D(i, j) = (i == j) ? std::exp(theta(idx)) : 1.0;
            ++idx;
        }
    return D;
}

struct RemlEval {
    double loglik = 0.0;
    Eigen::VectorXd grad;
    Eigen::VectorXd beta;
    Eigen::MatrixXd beta_cov; // sigma2 * (X' W^-1 X)^-1
    double sigma2 = 0.0;
};

RemlEval reml_evaluate(const MixedDesign& des, const Eigen::VectorXd& theta,
                       bool want_grad) {
    const int n = static_cast<int>(des.y.size());
    const int p = static_cast<int>(des.X.cols());
    const int q = des.Z.empty() ? 0 : static_cast<int>(des.Z.front().cols());
    const int nt = theta_dim(q);
    const int ng = static_cast<int>(des.Z.size());

    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(q, q);
    if (q > 0) {
        const Eigen::MatrixXd L = theta_to_L(theta, q);
        G = L * L.transpose();
    }

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p); // sum X' W^-1 X
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);    // sum X' W^-1 y
    double logdet_w = 0.0;

    std::vector<Eigen::MatrixXd> WinvX(ng);
    std::vector<Eigen::VectorXd> Winvy(ng);
    std::vector<Eigen::LLT<Eigen::MatrixXd>> llts(ng);

    for (int g = 0; g < ng; ++g) {
        const int s = des.group_start[g], m = des.group_size[g];
        const auto Xg = des.X.middleRows(s, m);
        const auto yg = des.y.segment(s, m);
        Eigen::MatrixXd W = Eigen::MatrixXd::Identity(m, m);
        if (q > 0) W += des.Z[g] * G * des.Z[g].transpose();
        llts[g].compute(W);
        if (llts[g].info() != Eigen::Success)
            throw NumericalError("reml: covariance factorization failed");
        for (int i = 0; i < m; ++i) logdet_w += 2.0 * std::log(llts[g].matrixLLT()(i, i));
        WinvX[g] = llts[g].solve(Xg);
        Winvy[g] = llts[g].solve(yg);
        A += Xg.transpose() * WinvX[g];
        b += Xg.transpose() * Winvy[g];
    }

    Eigen::LDLT<Eigen::MatrixXd> Aldlt(A);
    if (Aldlt.info() != Eigen::Success)
        throw NumericalError("reml: normal equations are singular");
    RemlEval ev;
    ev.beta = Aldlt.solve(b);

    double rss = 0.0;
    std::vector<Eigen::VectorXd> u(ng); // W^-1 r per group
    for (int g = 0; g < ng; ++g) {
        const int s = des.group_start[g], m = des.group_size[g];
        const Eigen::VectorXd r = des.y.segment(s, m) - des.X.middleRows(s, m) * ev.beta;
        u[g] = Winvy[g] - WinvX[g] * ev.beta;
        rss += r.dot(u[g]);
    }
    const double dof = n - p;
    if (dof <= 0) throw ValidationError("reml: need more observations than fixed effects");
    ev.sigma2 = rss / dof;
    if (ev.sigma2 <= 0.0) ev.sigma2 = 1e-300;

    double logdet_a = 0.0;
    {
        const Eigen::VectorXd d = Aldlt.vectorD();
        for (int i = 0; i < p; ++i) logdet_a += std::log(std::fabs(d(i)));
    }
    ev.loglik = -0.5 * (dof * (std::log(2.0 * M_PI) + 1.0) + dof * std::log(ev.sigma2) +
                        logdet_w + logdet_a);
    ev.beta_cov = ev.sigma2 * Aldlt.solve(Eigen::MatrixXd::Identity(p, p));

    if (want_grad && q > 0) {
        // d l / d theta_k = -0.5 tr(Gdot_k E), E = sum_g [S_g - T_g C T_g' - w w'/s2]
        // with S = Z'W^-1Z, T = Z'W^-1X, w = Z'W^-1r, C = A^-1.
        const Eigen::MatrixXd C = Aldlt.solve(Eigen::MatrixXd::Identity(p, p));
        Eigen::MatrixXd E = Eigen::MatrixXd::Zero(q, q);
        for (int g = 0; g < ng; ++g) {
            const int s = des.group_start[g], m = des.group_size[g];
            const Eigen::MatrixXd WinvZ = llts[g].solve(des.Z[g]);
            const Eigen::MatrixXd S = des.Z[g].transpose() * WinvZ;
            const Eigen::MatrixXd T =
                des.Z[g].transpose() * WinvX[g]; // q x p
            const Eigen::VectorXd w = des.Z[g].transpose() * u[g];
            E += S - T * C * T.transpose() - (w * w.transpose()) / ev.sigma2;
            (void)s;
            (void)m;
        }
        const Eigen::MatrixXd L = theta_to_L(theta, q);
        ev.grad.resize(nt);
        for (int k = 0; k < nt; ++k) {
            const Eigen::MatrixXd dL = theta_basis(theta, q, k);
            const Eigen::MatrixXd Gdot = dL * L.transpose() + L * dL.transpose();
            ev.grad(k) = -0.5 * (Gdot.array() * E.array()).sum();
        }
    } else {
        ev.grad = Eigen::VectorXd::Zero(nt);
    }
    return ev;
}

} // namespace

double reml_profile_loglik(const MixedDesign& design, const Eigen::VectorXd& theta) {
    return reml_evaluate(design, theta, false).loglik;
}

MixedModelFit reml_fit(const MixedDesign& des, const RemlOptions& opts) {
    const int q = des.Z.empty() ? 0 : static_cast<int>(des.Z.front().cols());
    const int nt = theta_dim(q);

    MixedModelFit fit;
    fit.n_obs = static_cast<int>(des.y.size());
    fit.n_groups = static_cast<int>(des.Z.size());
    fit.re_names = des.re_names;
    if (!des.group_size.empty()) {
        fit.group_min = *std::min_element(des.group_size.begin(), des.group_size.end());
        fit.group_max = *std::max_element(des.group_size.begin(), des.group_size.end());
        fit.group_mean = static_cast<double>(fit.n_obs) / fit.n_groups;
    }

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(nt);
    if (q > 0) {
        // Start at G = 0.1 I: log-diagonal at log(sqrt(0.1)).
        int idx = 0;
        for (int j = 0; j < q; ++j)
            for (int i = j; i < q; ++i) {
                theta(idx) = (i == j) ? 0.5 * std::log(0.1) : 0.0;
                ++idx;
            }
    }

    RemlEval ev = reml_evaluate(des, theta, q > 0);
    if (q > 0) {
        // BFGS ascent with backtracking line search on the profiled loglik.
        Eigen::MatrixXd H = Eigen::MatrixXd::Identity(nt, nt); // inverse Hessian approx
        int it = 0;
        for (; it < opts.max_iter; ++it) {
            fit.grad_norm = ev.grad.lpNorm<Eigen::Infinity>();
            if (fit.grad_norm < opts.tol) {
                fit.converged = true;
                break;
            }
            Eigen::VectorXd dir = H * ev.grad; // ascent
            if (dir.dot(ev.grad) <= 0.0) {
                H = Eigen::MatrixXd::Identity(nt, nt);
                dir = ev.grad;
            }
            // Cap the step so exp() stays sane.
            const double dmax = dir.lpNorm<Eigen::Infinity>();
            if (dmax > 5.0) dir *= 5.0 / dmax;

            double step = 1.0;
            RemlEval trial;
            bool accepted = false;
            for (int ls = 0; ls < 40; ++ls) {
                Eigen::VectorXd cand = theta + step * dir;
                // Keep log-diagonals bounded; below -18 the component is zero
                // for all practical purposes (variance < 1e-15).
                int idx = 0;
                for (int j = 0; j < q; ++j)
                    for (int i = j; i < q; ++i) {
                        if (i == j) cand(idx) = std::clamp(cand(idx), -18.0, 18.0);
                        ++idx;
                    }
                trial = reml_evaluate(des, cand, true);
                if (trial.loglik > ev.loglik + 1e-4 * step * ev.grad.dot(dir) ||
                    (ls > 0 && trial.loglik > ev.loglik)) {
                    const Eigen::VectorXd s = cand - theta;
                    const Eigen::VectorXd yv = ev.grad - trial.grad; // for -l minimization
                    const double sy = s.dot(yv);
                    if (sy > 1e-12) {
                        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(nt, nt);
                        H = (I - s * yv.transpose() / sy) * H *
                                (I - yv * s.transpose() / sy) +
                            s * s.transpose() / sy;
                    }
                    theta = cand;
                    ev = trial;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) {
                // No uphill step found: converged to numerical precision.
                fit.grad_norm = ev.grad.lpNorm<Eigen::Infinity>();
                fit.converged = fit.grad_norm < std::max(opts.tol, 1e-5);
                break;
            }
        }
        fit.iterations = it;
        if (!fit.converged && fit.grad_norm < opts.tol) fit.converged = true;
    } else {
        fit.converged = true;
    }

    const Eigen::MatrixXd L = q > 0 ? theta_to_L(theta, q) : Eigen::MatrixXd();
    if (q > 0) {
        fit.re_cov = ev.sigma2 * (L * L.transpose());
        for (int j = 0; j < q; ++j)
            if (L(j, j) < 1e-7) fit.boundary = true;
    } else {
        fit.re_cov = Eigen::MatrixXd::Zero(0, 0);
    }
    fit.residual_var = ev.sigma2;
    fit.reml_loglik = ev.loglik;
    fit.grad_norm = q > 0 ? ev.grad.lpNorm<Eigen::Infinity>() : 0.0;

    fit.fixed.resize(des.fixed_names.size());
    for (std::size_t j = 0; j < des.fixed_names.size(); ++j) {
        fit.fixed[j].name = des.fixed_names[j];
        fit.fixed[j].coef = ev.beta(static_cast<int>(j));
        fit.fixed[j].se = std::sqrt(ev.beta_cov(static_cast<int>(j), static_cast<int>(j)));
    }
    wald_tests(fit);
    return fit;
}

std::vector<FixedEffect> wald_tests(MixedModelFit& fit) {
    constexpr double z975 = 1.959964;
    for (auto& fe : fit.fixed) {
        fe.z = fe.se > 0.0 ? fe.coef / fe.se : 0.0;
        fe.p = fe.se > 0.0 ? 2.0 * normal_sf(std::fabs(fe.z)) : 1.0;
        fe.ci_low = fe.coef - z975 * fe.se;
        fe.ci_high = fe.coef + z975 * fe.se;
    }
    return fit.fixed;
}

} // namespace gazenet::stats
