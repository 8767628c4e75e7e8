#include "randscen/fhc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "randscen/errors.hpp"

namespace randscen::scenario {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd matrix_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.empty() || !j.front().is_array()) {
        throw DomainError(std::string("fhc config: '") + what + "' must be a nonempty array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(row.size()) != cols) {
            throw DomainError(std::string("fhc config: '") + what + "' has ragged rows");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

VectorXd vector_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array()) throw DomainError(std::string("fhc config: '") + what + "' must be an array");
    VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

nlohmann::json matrix_to_json(const MatrixXd& m) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(row);
    }
    return out;
}

nlohmann::json vector_to_json(const VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

// Affine form of the terminal deviation: z(u, delta) - z_ref = G u - e.
struct AffineSample {
    MatrixXd G;
    VectorXd e;
};

AffineSample affine_form(const FhcConfig& cfg, const Sample& delta) {
    const MatrixXd A = fhc_dynamics(cfg, delta);
    const int nu = cfg.nu();
    AffineSample a;
    a.G.resize(cfg.nz(), cfg.n_inputs());
    MatrixXd p = cfg.B;
    for (int t = cfg.N - 1; t >= 0; --t) {
        a.G.block(0, t * nu, cfg.nz(), nu) = p;
        if (t > 0) p = A * p;
    }
    VectorXd h = cfg.z0;
    for (int t = 0; t < cfg.N; ++t) h = A * h;
    a.e = cfg.z_ref - h;
    return a;
}

class Objective {
public:
    Objective(const FhcConfig& cfg, const std::vector<SampleSet>& sets) : cfg_(cfg) {
        if (static_cast<int>(sets.size()) != cfg.families()) {
            throw DomainError("fhc: expected " + std::to_string(cfg.families()) + " sample sets, got " +
                              std::to_string(sets.size()));
        }
        forms_.resize(sets.size());
        curvature_ = 2.0 * cfg.lambda;
        for (std::size_t j = 0; j < sets.size(); ++j) {
            if (sets[j].empty()) throw DomainError("fhc: every sample set must be nonempty");
            double gmax = 0.0;
            for (const auto& d : sets[j]) {
                forms_[j].push_back(affine_form(cfg, d));
                gmax = std::max(gmax, forms_[j].back().G.squaredNorm());
            }
            curvature_ += 2.0 * cfg.sigmas[j] * gmax;
        }
    }

    // Returns F(u); fills a subgradient and the per-family maxima.
    double eval(const VectorXd& u, VectorXd* grad, std::vector<double>* maxima) const {
        double f = cfg_.lambda * u.squaredNorm();
        if (grad) *grad = 2.0 * cfg_.lambda * u;
        if (maxima) maxima->assign(forms_.size(), 0.0);
        for (std::size_t j = 0; j < forms_.size(); ++j) {
            double best = -1.0;
            std::size_t arg = 0;
            VectorXd best_res;
            for (std::size_t i = 0; i < forms_[j].size(); ++i) {
                VectorXd res = forms_[j][i].G * u - forms_[j][i].e;
                const double g = res.squaredNorm();
                if (g > best) {
                    best = g;
                    arg = i;
                    best_res = std::move(res);
                }
            }
            f += cfg_.sigmas[j] * best;
            if (grad) *grad += 2.0 * cfg_.sigmas[j] * forms_[j][arg].G.transpose() * best_res;
            if (maxima) (*maxima)[j] = best;
        }
        return f;
    }

    double curvature() const { return curvature_; }

private:
    const FhcConfig& cfg_;
    std::vector<std::vector<AffineSample>> forms_;
    double curvature_ = 0.0;
};

// min 0.5 a'Ha + c'a over the unit simplex, by a primal active-set method.
VectorXd simplex_qp(const MatrixXd& H, const VectorXd& c) {
    const Eigen::Index k = c.size();
    VectorXd a = VectorXd::Zero(k);
    std::vector<bool> active(static_cast<std::size_t>(k), false);
    Eigen::Index j0 = 0;
    for (Eigen::Index l = 1; l < k; ++l) {
        if (0.5 * H(l, l) + c[l] < 0.5 * H(j0, j0) + c[j0]) j0 = l;
    }
    a[j0] = 1.0;
    active[static_cast<std::size_t>(j0)] = true;
    const double reg = 1e-13 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
    const double scale = 1.0 + c.cwiseAbs().maxCoeff() + H.cwiseAbs().maxCoeff();

    for (int outer = 0; outer < 4 * static_cast<int>(k) + 20; ++outer) {
        const VectorXd g = H * a + c;
        const double lam = a.dot(g);
        Eigen::Index jin = -1;
        double most = -1e-14 * scale;
        for (Eigen::Index l = 0; l < k; ++l) {
            if (!active[static_cast<std::size_t>(l)] && g[l] - lam < most) {
                most = g[l] - lam;
                jin = l;
            }
        }
        if (jin < 0) break;
        active[static_cast<std::size_t>(jin)] = true;

        for (int inner = 0; inner < static_cast<int>(k) + 5; ++inner) {
            std::vector<Eigen::Index> idx;
            for (Eigen::Index l = 0; l < k; ++l) {
                if (active[static_cast<std::size_t>(l)]) idx.push_back(l);
            }
            const auto p = static_cast<Eigen::Index>(idx.size());
            MatrixXd kkt = MatrixXd::Zero(p + 1, p + 1);
            VectorXd rhs(p + 1);
            for (Eigen::Index r = 0; r < p; ++r) {
                for (Eigen::Index s = 0; s < p; ++s) kkt(r, s) = H(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(s)]);
                kkt(r, r) += reg;
                kkt(r, p) = 1.0;
                kkt(p, r) = 1.0;
                rhs[r] = -c[idx[static_cast<std::size_t>(r)]];
            }
            rhs[p] = 1.0;
            const VectorXd y = kkt.fullPivLu().solve(rhs);
            double t = 1.0;
            Eigen::Index block = -1;
            for (Eigen::Index r = 0; r < p; ++r) {
                const Eigen::Index l = idx[static_cast<std::size_t>(r)];
                if (y[r] <= 0.0) {
                    const double denom = a[l] - y[r];
                    const double tl = denom > 0.0 ? a[l] / denom : 0.0;
                    if (tl < t) {
                        t = tl;
                        block = l;
                    }
                }
            }
            for (Eigen::Index r = 0; r < p; ++r) {
                const Eigen::Index l = idx[static_cast<std::size_t>(r)];
                a[l] += t * (y[r] - a[l]);
            }
            if (block < 0) break;
            a[block] = 0.0;
            active[static_cast<std::size_t>(block)] = false;
            for (Eigen::Index l = 0; l < k; ++l) {
                if (active[static_cast<std::size_t>(l)] && a[l] <= 0.0) {
                    a[l] = 0.0;
                    active[static_cast<std::size_t>(l)] = false;
                }
            }
        }
    }
    a = a.cwiseMax(0.0);
    const double s = a.sum();
    if (s > 0.0) a /= s;
    else a[j0] = 1.0;
    return a;
}

}  // namespace

void FhcConfig::validate() const {
    if (A0.rows() < 1 || A0.rows() != A0.cols()) throw DomainError("fhc config: A0 must be square and nonempty");
    if (B.rows() != A0.rows() || B.cols() < 1) throw DomainError("fhc config: B must have n_z rows and >= 1 column");
    if (z0.size() != A0.rows() || z_ref.size() != A0.rows()) throw DomainError("fhc config: z0 and z_ref need n_z entries");
    if (N < 1) throw DomainError("fhc config: N must be >= 1");
    if (!(rho >= 0.0)) throw DomainError("fhc config: rho must be >= 0");
    if (!(lambda > 0.0)) throw DomainError("fhc config: lambda must be > 0");
    if (sigmas.empty()) throw DomainError("fhc config: need at least one sigma");
    for (double s : sigmas) {
        if (!(s > 0.0)) throw DomainError("fhc config: sigmas must be > 0");
    }
    if (!supports.empty() && supports.size() != sigmas.size()) {
        throw DomainError("fhc config: supports must have one entry per sigma");
    }
    for (const auto& s : supports) s.validate();
}

nlohmann::json FhcConfig::to_json() const {
    nlohmann::json sup = nlohmann::json::array();
    for (int j = 0; j < families(); ++j) {
        const SupportBounds s = supports.empty() ? SupportBounds{1, n_inputs() + 1} : supports[static_cast<std::size_t>(j)];
        sup.push_back({s.zeta_low, s.zeta_high});
    }
    return {{"problem", "fhc"},      {"A0", matrix_to_json(A0)},    {"B", matrix_to_json(B)},
            {"z0", vector_to_json(z0)}, {"z_ref", vector_to_json(z_ref)}, {"rho", rho},
            {"N", N},                {"lambda", lambda},            {"sigmas", sigmas},
            {"supports", sup}};
}

FhcConfig FhcConfig::from_json(const nlohmann::json& j) {
    FhcConfig c = synthetic(1);
    if (j.contains("A0")) c.A0 = matrix_from_json(j.at("A0"), "A0");
    if (j.contains("B")) c.B = matrix_from_json(j.at("B"), "B");
    if (j.contains("z0")) c.z0 = vector_from_json(j.at("z0"), "z0");
    if (j.contains("z_ref")) c.z_ref = vector_from_json(j.at("z_ref"), "z_ref");
    c.rho = j.value("rho", c.rho);
    c.N = j.value("N", c.N);
    c.lambda = j.value("lambda", c.lambda);
    if (j.contains("sigmas")) c.sigmas = j.at("sigmas").get<std::vector<double>>();
    c.supports.clear();
    if (j.contains("supports")) {
        for (const auto& s : j.at("supports")) {
            c.supports.push_back({s.at(0).get<std::int64_t>(), s.at(1).get<std::int64_t>()});
        }
    }
    c.validate();
    return c;
}

FhcConfig FhcConfig::synthetic(int families) {
    FhcConfig c;
    const int nz = 6;
    c.A0 = MatrixXd::Zero(nz, nz);
    for (int i = 0; i < nz; ++i) {
        c.A0(i, i) = 0.8;
        if (i + 1 < nz) c.A0(i, i + 1) = 0.3;
        if (i > 0) c.A0(i, i - 1) = -0.1;
    }
    c.B = MatrixXd::Zero(nz, 1);
    c.B(nz - 1, 0) = 1.0;
    c.z0 = VectorXd::Ones(nz);
    c.z_ref = VectorXd::Zero(nz);
    c.rho = 0.05;
    c.N = 10;
    c.lambda = 0.005;
    c.sigmas.clear();
    for (int j = 0; j < families; ++j) c.sigmas.push_back(j == 0 ? 1.0 : 10.0);
    return c;
}

MatrixXd fhc_dynamics(const FhcConfig& cfg, const Sample& delta) {
    const int nz = cfg.nz();
    if (delta.size() != static_cast<Eigen::Index>(nz) * nz) {
        throw DomainError("fhc: sample must have n_z^2 = " + std::to_string(nz * nz) + " entries");
    }
    MatrixXd A = cfg.A0;
    for (int r = 0; r < nz; ++r) {
        for (int c = 0; c < nz; ++c) A(r, c) += delta[r * nz + c];
    }
    return A;
}

VectorXd fhc_simulate(const FhcConfig& cfg, const VectorXd& u, const Sample& delta) {
    if (u.size() != cfg.n_inputs()) {
        throw DomainError("fhc_simulate: u must have N*n_u = " + std::to_string(cfg.n_inputs()) + " entries");
    }
    const MatrixXd A = fhc_dynamics(cfg, delta);
    const int nu = cfg.nu();
    VectorXd z = cfg.z0;
    for (int t = 0; t < cfg.N; ++t) z = A * z + cfg.B * u.segment(t * nu, nu);
    return z;
}

double fhc_objective(const FhcConfig& cfg, const std::vector<SampleSet>& sets, const VectorXd& u) {
    const Objective obj(cfg, sets);
    return obj.eval(u, nullptr, nullptr);
}

Solution fhc_solve(const FhcConfig& cfg, const std::vector<SampleSet>& sets, const BundleOptions& opt,
                   const VectorXd* u_start) {
    cfg.validate();
    const Objective obj(cfg, sets);
    const int n = cfg.n_inputs();

    VectorXd center = u_start ? *u_start : VectorXd::Zero(n);
    if (center.size() != n) throw DomainError("fhc_solve: start point has wrong dimension");
    VectorXd s;
    double f_center = obj.eval(center, &s, nullptr);

    // Cuts stored relative to the stability center: model(y) = f_center - e_l + s_l'(y - center).
    std::vector<VectorXd> cut_s{s};
    std::vector<double> cut_e{0.0};

    const double mu0 = std::max(obj.curvature(), 1e-12);
    double mu = mu0;
    Solution sol;
    sol.history.push_back(f_center);
    bool converged = false;
    double residual = std::numeric_limits<double>::infinity();
    int iter = 0;

    for (iter = 1; iter <= opt.max_iter; ++iter) {
        const auto k = static_cast<Eigen::Index>(cut_s.size());
        MatrixXd S(n, k);
        VectorXd e(k);
        for (Eigen::Index l = 0; l < k; ++l) {
            S.col(l) = cut_s[static_cast<std::size_t>(l)];
            e[l] = cut_e[static_cast<std::size_t>(l)];
        }
        const MatrixXd H = (S.transpose() * S) / mu;
        const VectorXd alpha = simplex_qp(H, e);
        const VectorXd g = S * alpha;
        const double agg_e = alpha.dot(e);
        const double v = g.squaredNorm() / mu + agg_e;
        residual = g.norm();
        const double scale = 1.0 + std::fabs(f_center);
        if (v <= opt.tol_decrease * scale ||
            (residual <= opt.tol_residual * scale && agg_e <= opt.tol_residual * scale)) {
            converged = true;
            break;
        }

        const VectorXd d = -g / mu;
        const VectorXd trial = center + d;
        VectorXd s_new;
        const double f_new = obj.eval(trial, &s_new, nullptr);

        // keep cuts with positive weight; fold the rest into the aggregate when the bundle is full
        std::vector<VectorXd> keep_s;
        std::vector<double> keep_e;
        for (Eigen::Index l = 0; l < k; ++l) {
            if (alpha[l] > 1e-14) {
                keep_s.push_back(cut_s[static_cast<std::size_t>(l)]);
                keep_e.push_back(cut_e[static_cast<std::size_t>(l)]);
            }
        }
        if (static_cast<int>(keep_s.size()) + 1 > opt.max_bundle) {
            keep_s.assign(1, g);
            keep_e.assign(1, agg_e);
        }

        const double decrease = f_center - f_new;
        if (decrease >= opt.serious_fraction * v) {
            for (std::size_t l = 0; l < keep_s.size(); ++l) {
                keep_e[l] = std::max(0.0, keep_e[l] - decrease - keep_s[l].dot(d));
            }
            keep_s.push_back(s_new);
            keep_e.push_back(0.0);
            center = trial;
            f_center = f_new;
            sol.history.push_back(f_center);
            if (decrease >= 0.5 * v) mu = std::max(0.5 * mu, 1e-10 * mu0);
            const auto h = sol.history.size();
            if (h > static_cast<std::size_t>(opt.stall_window)) {
                const double old = sol.history[h - 1 - static_cast<std::size_t>(opt.stall_window)];
                if (old - f_center <= opt.tol_change * (1.0 + std::fabs(f_center))) {
                    converged = true;
                    cut_s = std::move(keep_s);
                    cut_e = std::move(keep_e);
                    break;
                }
            }
        } else {
            keep_s.push_back(s_new);
            keep_e.push_back(std::max(0.0, decrease + s_new.dot(d)));
            mu = std::min(1.5 * mu, 1e6 * mu0);
        }
        cut_s = std::move(keep_s);
        cut_e = std::move(keep_e);
    }

    std::vector<double> maxima;
    sol.objective = obj.eval(center, nullptr, &maxima);
    sol.x.resize(n + cfg.families());
    sol.x.head(n) = center;
    for (int j = 0; j < cfg.families(); ++j) sol.x[n + j] = maxima[static_cast<std::size_t>(j)];
    sol.residual = residual;
    sol.iterations = std::min(iter, opt.max_iter);
    if (!converged) {
        throw SolverError("fhc bundle method: no convergence after " + std::to_string(opt.max_iter) +
                          " iterations; best objective " + std::to_string(sol.objective) + ", residual " +
                          std::to_string(residual));
    }
    return sol;
}

Fhc::Fhc(FhcConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

SupportBounds Fhc::support(int j) const {
    if (j < 0 || j >= cfg_.families()) throw DomainError("fhc: constraint index out of range");
    if (cfg_.supports.empty()) return {1, cfg_.n_inputs() + 1};
    return cfg_.supports[static_cast<std::size_t>(j)];
}

void Fhc::draw(Stream& rng, int, Sample& out) const {
    const int d = sample_dim();
    out.resize(d);
    for (int i = 0; i < d; ++i) out[i] = cfg_.rho * (2.0 * rng.uniform() - 1.0);
}

Solution Fhc::solve(const std::vector<SampleSet>& sets) const { return fhc_solve(cfg_, sets); }

bool Fhc::violated(const Solution& sol, const Sample& delta, int j) const {
    const int n = cfg_.n_inputs();
    const VectorXd z = fhc_simulate(cfg_, sol.x.head(n), delta);
    const double dev = (cfg_.z_ref - z).squaredNorm();
    const double r2 = sol.x[n + j];
    return dev > r2 * (1.0 + 1e-9) + 1e-12;
}

}  // namespace randscen::scenario
