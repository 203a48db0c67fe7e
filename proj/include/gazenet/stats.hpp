#pragma once

#include "gazenet/metrics.hpp"
#include "gazenet/types.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace gazenet::stats {

// ---- one-way ANOVA ---------------------------------------------------------

struct AnovaCore {
    double f = 0.0;
    double p = 1.0;
    int df_between = 0;
    int df_within = 0;
    bool all_identical = false; // every observation equal: F undefined, reported 0/1
    bool infinite_f = false;    // zero within-group variance, unequal means
};

AnovaCore oneway_anova(const std::vector<std::vector<double>>& groups);

// Regularized incomplete beta I_x(a,b) via Lentz continued fractions.
double incomplete_beta(double a, double b, double x);

// Upper-tail F survival function: P(F > x) for d1, d2 degrees of freedom.
double f_sf(double x, double d1, double d2);

// Standard normal survival function.
double normal_sf(double z);

// ---- mixed linear model (REML) ---------------------------------------------

// Table-2-ordered fixed-effect predictors (metric machine keys; "time" is the
// within-participant ordered trial index).
const std::vector<std::string>& lmm_predictors();
std::string lmm_display_name(const std::string& key);

struct TrialRow {
    TrialKey key;
    metrics::MetricVector metrics;
    std::optional<double> bfd;
};

struct DesignOptions {
    std::vector<std::string> drop_predictors;
    bool standardize = false; // z-score the non-intercept columns
};

struct MixedDesign {
    Eigen::VectorXd y;
    Eigen::MatrixXd X; // intercept first
    std::vector<std::string> fixed_names;
    std::vector<std::string> group_ids;  // one per group, insertion order
    std::vector<Eigen::MatrixXd> Z;      // per-group random-effect design
    std::vector<int> group_start;        // row offset of each group in y/X
    std::vector<int> group_size;
    std::vector<std::string> re_names;   // e.g. {"intercept", "semester"}
    std::vector<std::string> deletion_report; // listwise deletions, one entry each
};

// y = bfd; X = intercept + predictors in Table order; Z = per-participant
// random intercept and semester slope. Rows lacking a score or flagged
// degenerate are deleted (and reported). Rank deficiency raises an error
// naming the redundant columns.
MixedDesign build_design(const std::vector<TrialRow>& rows, const DesignOptions& opts = {});

struct FixedEffect {
    std::string name;
    double coef = 0.0;
    double se = 0.0;
    double z = 0.0;
    double p = 1.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct MixedModelFit {
    std::vector<FixedEffect> fixed;
    Eigen::MatrixXd re_cov;      // q x q random-effect covariance (original scale)
    double residual_var = 0.0;   // the model "scale"
    double reml_loglik = 0.0;
    int n_obs = 0;
    int n_groups = 0;
    int group_min = 0;
    double group_mean = 0.0;
    int group_max = 0;
    bool converged = false;
    bool boundary = false; // a variance component hit (numerical) zero
    int iterations = 0;
    double grad_norm = 0.0;
    std::vector<std::string> re_names;
};

struct RemlOptions {
    double tol = 1e-8;   // gradient norm for convergence
    int max_iter = 500;
};

// Profiled REML: quasi-Newton ascent over the log-Cholesky factor of the
// scaled random-effect covariance, residual variance profiled out, fixed
// effects by GLS at the optimum.
MixedModelFit reml_fit(const MixedDesign& design, const RemlOptions& opts = {});

// Profiled REML log-likelihood at a given log-Cholesky parameter vector
// (exposed for optimality probes).
double reml_profile_loglik(const MixedDesign& design, const Eigen::VectorXd& theta);

// Fills z, p and the 95% CI (beta +- 1.959964 se) for every fixed effect and
// returns the completed table.
std::vector<FixedEffect> wald_tests(MixedModelFit& fit);

} // namespace gazenet::stats
