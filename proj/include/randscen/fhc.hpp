#pragma once

#include <vector>

#include "randscen/scenario.hpp"

namespace randscen::scenario {

// Finite-horizon control: z(t+1) = (A0 + Delta) z(t) + B u(t), Delta entries uniform on [-rho, rho].
struct FhcConfig {
    Eigen::MatrixXd A0;
    Eigen::MatrixXd B;
    Eigen::VectorXd z0;
    Eigen::VectorXd z_ref;
    double rho = 0.05;
    int N = 10;
    double lambda = 0.005;
    std::vector<double> sigmas{1.0};
    std::vector<SupportBounds> supports;  // one per constraint family; default (1, N n_u + 1)

    int nz() const { return static_cast<int>(A0.rows()); }
    int nu() const { return static_cast<int>(B.cols()); }
    int n_inputs() const { return N * nu(); }
    int families() const { return static_cast<int>(sigmas.size()); }

    void validate() const;
    nlohmann::json to_json() const;
    static FhcConfig from_json(const nlohmann::json& j);
    // n_z = 6, n_u = 1, N = 10 test model; `families` constraint families with sigmas 1, 10, ...
    static FhcConfig synthetic(int families = 1);
};

struct BundleOptions {
    int max_iter = 10000;
    int max_bundle = 60;
    double tol_change = 1e-9;   // relative objective change over `stall_window` serious steps
    int stall_window = 10;
    double tol_residual = 1e-8; // aggregate subgradient norm and linearization error
    double tol_decrease = 1e-13; // predicted decrease, relative
    double serious_fraction = 0.1;
};

// State after N steps, by z <- A(delta) z + B u(t).
Eigen::VectorXd fhc_simulate(const FhcConfig& cfg, const Eigen::VectorXd& u, const Sample& delta);

// A0 + Delta with Delta read row-major from delta.
Eigen::MatrixXd fhc_dynamics(const FhcConfig& cfg, const Sample& delta);

// Objective lambda |u|^2 + sum_j sigma_j max_{delta in set j} |z_ref - z(u, delta)|^2.
double fhc_objective(const FhcConfig& cfg, const std::vector<SampleSet>& sets, const Eigen::VectorXd& u);

// x = (u, R_1^2, ..., R_nu^2). history holds the objective at each serious step.
Solution fhc_solve(const FhcConfig& cfg, const std::vector<SampleSet>& sets, const BundleOptions& opt = {},
                   const Eigen::VectorXd* u_start = nullptr);

class Fhc final : public ScenarioProblem {
public:
    explicit Fhc(FhcConfig cfg);

    std::string name() const override { return "fhc"; }
    int decision_dim() const override { return cfg_.n_inputs() + cfg_.families(); }
    int sample_dim() const override { return cfg_.nz() * cfg_.nz(); }
    int constraint_count() const override { return cfg_.families(); }
    SupportBounds support(int j = 0) const override;
    using ScenarioProblem::draw;
    void draw(Stream& rng, int j, Sample& out) const override;
    Solution solve(const std::vector<SampleSet>& sets) const override;
    bool violated(const Solution& sol, const Sample& delta, int j = 0) const override;
    nlohmann::json config() const override { return cfg_.to_json(); }

    const FhcConfig& cfg() const { return cfg_; }

private:
    FhcConfig cfg_;
};

}  // namespace randscen::scenario
