#include "randscen/minball.hpp"

#include <cmath>
#include <list>

#include "randscen/errors.hpp"

namespace randscen::scenario {

namespace {

struct Ball {
    Eigen::VectorXd c;
    double r2 = -1.0;  // negative: empty ball
};

// Move-to-front Welzl recursion. Recursion only descends when a point joins the boundary set,
// so depth is bounded by d + 1 regardless of the number of points.
class Welzl {
public:
    explicit Welzl(const SampleSet& pts) : pts_(pts), dim_(static_cast<int>(pts.front().size())) {
        for (int i = 0; i < static_cast<int>(pts.size()); ++i) order_.push_back(i);
    }

    Ball run() {
        std::vector<int> boundary;
        return mtf(order_.end(), boundary);
    }

private:
    bool outside(const Ball& b, const Sample& p) const {
        if (b.r2 < 0.0) return true;
        return (p - b.c).squaredNorm() > b.r2 + 1e-12 * (1.0 + b.r2);
    }

    // Smallest ball with every boundary point on its surface (center in their affine hull).
    Ball circumball(const std::vector<int>& boundary) const {
        Ball b;
        if (boundary.empty()) return b;
        const Sample& p0 = pts_[static_cast<std::size_t>(boundary[0])];
        if (boundary.size() == 1) {
            b.c = p0;
            b.r2 = 0.0;
            return b;
        }
        const int k = static_cast<int>(boundary.size()) - 1;
        Eigen::MatrixXd v(dim_, k);
        for (int i = 0; i < k; ++i) v.col(i) = pts_[static_cast<std::size_t>(boundary[static_cast<std::size_t>(i + 1)])] - p0;
        const Eigen::MatrixXd g = 2.0 * v.transpose() * v;
        const Eigen::VectorXd rhs = v.colwise().squaredNorm().transpose();
        Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
        lu.setThreshold(1e-13);
        if (lu.rank() < k) throw SolverError("minball: circumsphere system is singular (affinely dependent boundary points)");
        const Eigen::VectorXd lambda = lu.solve(rhs);
        b.c = p0 + v * lambda;
        b.r2 = (b.c - p0).squaredNorm();
        return b;
    }

    Ball mtf(std::list<int>::iterator end, std::vector<int>& boundary) {
        Ball ball = circumball(boundary);
        if (static_cast<int>(boundary.size()) == dim_ + 1) return ball;
        for (auto it = order_.begin(); it != end;) {
            const auto next = std::next(it);
            if (outside(ball, pts_[static_cast<std::size_t>(*it)])) {
                boundary.push_back(*it);
                ball = mtf(it, boundary);
                boundary.pop_back();
                order_.splice(order_.begin(), order_, it);
            }
            it = next;
        }
        return ball;
    }

    const SampleSet& pts_;
    int dim_;
    std::list<int> order_;
};

}  // namespace

Solution minball_solve(const SampleSet& samples) {
    if (samples.empty()) throw DomainError("minball_solve needs at least one sample");
    const auto d = samples.front().size();
    if (d < 1) throw DomainError("minball_solve needs dimension >= 1");
    for (const auto& s : samples) {
        if (s.size() != d) throw DomainError("minball_solve: samples differ in dimension");
    }
    Welzl w(samples);
    const Ball b = w.run();
    double radius = std::sqrt(std::max(0.0, b.r2));
    // absorb rounding so every defining sample is feasible
    for (const auto& s : samples) radius = std::max(radius, (s - b.c).norm());
    const double tol = minball_support_tol(radius);
    std::int64_t on_boundary = 0;
    for (const auto& s : samples) {
        if (std::fabs((s - b.c).norm() - radius) <= tol) ++on_boundary;
    }
    Solution sol;
    sol.x.resize(static_cast<Eigen::Index>(d) + 1);
    sol.x.head(static_cast<Eigen::Index>(d)) = b.c;
    sol.x[static_cast<Eigen::Index>(d)] = radius;
    sol.objective = radius;
    sol.support_count = on_boundary;
    return sol;
}

MinBall::MinBall(int dim) : dim_(dim) {
    if (dim < 1) throw DomainError("minball dimension must be >= 1");
}

void MinBall::draw(Stream& rng, int, Sample& out) const {
    out.resize(dim_);
    for (int i = 0; i < dim_; ++i) out[i] = rng.normal();
}

Solution MinBall::solve(const std::vector<SampleSet>& sets) const {
    if (sets.size() != 1) throw DomainError("minball has a single constraint family");
    return minball_solve(sets.front());
}

bool MinBall::violated(const Solution& sol, const Sample& delta, int) const {
    const double r = sol.x[dim_];
    const double lim = r + 1e-9 * (1.0 + r);
    return (delta - sol.x.head(dim_)).squaredNorm() > lim * lim;
}

nlohmann::json MinBall::config() const {
    return {{"problem", "minball"}, {"dim", dim_}, {"distribution", "standard normal"}};
}

}  // namespace randscen::scenario
