#include "abstain/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>

namespace abstain {

namespace {

std::atomic<std::uint64_t> g_oracle_calls{0};

struct OracleBudget {
    std::uint64_t used = 0;
    std::uint64_t cap = 0;
    void charge(std::uint64_t n = 1) {
        used += n;
        if (cap && used > cap)
            throw std::runtime_error(
                "approx_bound: oracle call budget exceeded (class violates the assumed structure)");
    }
};

// ---- small symmetric eigensolver (cyclic Jacobi), d is tiny ----

void jacobi_eigen(std::vector<std::vector<double>> a, std::vector<double>& vals,
                  std::vector<std::vector<double>>& vecs) {
    const int d = static_cast<int>(a.size());
    vecs.assign(static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(d), 0.0));
    for (int i = 0; i < d; ++i) vecs[i][i] = 1.0;
    double scale = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) scale = std::max(scale, std::abs(a[i][j]));
    if (scale == 0.0) scale = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < d; ++p)
            for (int q = p + 1; q < d; ++q) off = std::max(off, std::abs(a[p][q]));
        if (off <= 1e-15 * scale) break;
        for (int p = 0; p < d; ++p) {
            for (int q = p + 1; q < d; ++q) {
                if (std::abs(a[p][q]) <= 1e-18 * scale) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < d; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (int k = 0; k < d; ++k) {
                    const double vkp = vecs[k][p], vkq = vecs[k][q];
                    vecs[k][p] = c * vkp - s * vkq;
                    vecs[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    vals.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) vals[static_cast<std::size_t>(i)] = a[i][i];
}

// min ||sqrt(W)(A w - b)||^2 s.t. ||w||_2 <= R, via the normal equations'
// eigendecomposition; min-norm solution when singular, trust-region
// bisection on the multiplier when the ball binds.
std::vector<double> solve_ball_least_squares(const std::vector<std::vector<double>>& gram,
                                             const std::vector<double>& rhs, double radius) {
    const int d = static_cast<int>(rhs.size());
    std::vector<double> vals;
    std::vector<std::vector<double>> vecs;
    jacobi_eigen(gram, vals, vecs);
    std::vector<double> c(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) c[i] += vecs[k][i] * rhs[k];
    double lam_max = 0.0;
    for (double v : vals) lam_max = std::max(lam_max, v);
    const double tol = lam_max * 1e-12;

    auto coords_norm = [&](double mu, std::vector<double>& coords) {
        double norm_sq = 0.0;
        for (int i = 0; i < d; ++i) {
            const double denom = vals[i] + mu;
            double w;
            if (denom > tol + mu * 0.0 && denom > 0.0)
                w = c[i] / denom;
            else
                w = 0.0;
            if (mu == 0.0 && vals[i] <= tol) w = 0.0;  // min-norm: drop null directions
            coords[i] = w;
            norm_sq += w * w;
        }
        return std::sqrt(norm_sq);
    };

    std::vector<double> coords(static_cast<std::size_t>(d), 0.0);
    const double norm0 = coords_norm(0.0, coords);
    if (norm0 <= radius * (1.0 + 1e-12)) {
        // inside the ball already
    } else {
        double c_norm = 0.0;
        for (double v : c) c_norm += v * v;
        c_norm = std::sqrt(c_norm);
        double mu_lo = 0.0;
        double mu_hi = std::max(c_norm / radius, 1e-300);
        while (coords_norm(mu_hi, coords) > radius && mu_hi < 1e300) mu_hi *= 2.0;
        for (int it = 0; it < 300; ++it) {
            const double mu = 0.5 * (mu_lo + mu_hi);
            if (coords_norm(mu, coords) > radius)
                mu_lo = mu;
            else
                mu_hi = mu;
            if (mu_hi - mu_lo <= 1e-10 * std::max(1.0, mu_hi) &&
                std::abs(coords_norm(mu_hi, coords) - radius) <= 1e-10 * radius)
                break;
        }
        coords_norm(mu_hi, coords);  // final point inside the ball
    }
    std::vector<double> w(static_cast<std::size_t>(d), 0.0);
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i) w[k] += vecs[k][i] * coords[i];
    return w;
}

void validate_samples(std::span<const WeightedSample> samples) {
    for (const WeightedSample& s : samples) {
        if (!std::isfinite(s.weight) || s.weight < 0.0)
            throw std::invalid_argument("sample weight must be finite and nonnegative");
        if (!std::isfinite(s.y01) || (s.y01 != 0.0 && s.y01 != 1.0))
            throw std::invalid_argument("sample target must be 0 or 1");
    }
}

RegressionFunction fit_finite(std::span<const WeightedSample> samples, const ClassPtr& cls) {
    const auto& table = cls->table();
    int best = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    for (int id = 0; id < cls->size(); ++id) {
        const auto& row = table[static_cast<std::size_t>(id)];
        double loss = 0.0;
        for (const WeightedSample& s : samples) {
            const double d = row[static_cast<std::size_t>(s.x.region)] - s.y01;
            loss += s.weight * d * d;
        }
        if (loss < best_loss) {
            best_loss = loss;
            best = id;
        }
    }
    return cls->member(best);
}

RegressionFunction fit_linear(std::span<const WeightedSample> samples, const ClassPtr& cls) {
    const int d = cls->dim();
    std::vector<std::vector<double>> gram(static_cast<std::size_t>(d),
                                          std::vector<double>(static_cast<std::size_t>(d), 0.0));
    std::vector<double> rhs(static_cast<std::size_t>(d), 0.0);
    for (const WeightedSample& s : samples) {
        const std::vector<double>& phi = cls->features(s.x.region);
        for (int i = 0; i < d; ++i) {
            rhs[i] += s.weight * s.y01 * phi[i];
            for (int j = 0; j < d; ++j) gram[i][j] += s.weight * phi[i] * phi[j];
        }
    }
    return cls->linear_member(solve_ball_least_squares(gram, rhs, cls->weight_bound()));
}

}  // namespace

std::uint64_t oracle_call_count() { return g_oracle_calls.load(std::memory_order_relaxed); }

RegressionFunction fit(std::span<const WeightedSample> samples, const ClassPtr& cls) {
    validate_samples(samples);
    g_oracle_calls.fetch_add(1, std::memory_order_relaxed);
    if (cls->kind() == ClassKind::Finite) return fit_finite(samples, cls);
    return fit_linear(samples, cls);
}

QueryHistory::QueryHistory(ClassPtr cls) : cls_(std::move(cls)) {
    const auto n = static_cast<std::size_t>(cls_->num_points());
    region_n_.assign(n, 0.0);
    region_sy_.assign(n, 0.0);
    if (cls_->kind() == ClassKind::Finite) member_loss_.assign(static_cast<std::size_t>(cls_->size()), 0.0);
}

void QueryHistory::append_queried(const Point& x, double y01) {
    if (y01 != 0.0 && y01 != 1.0) throw std::invalid_argument("y01 must be 0 or 1");
    steps_.push_back(Step{x, true, y01});
    ++queried_count_;
    const auto r = static_cast<std::size_t>(x.region);
    region_n_[r] += 1.0;
    region_sy_[r] += y01;
    if (cls_->kind() == ClassKind::Finite) {
        const auto& table = cls_->table();
        min_loss_ = std::numeric_limits<double>::infinity();
        argmin_ = 0;
        for (int id = 0; id < cls_->size(); ++id) {
            const double d = table[static_cast<std::size_t>(id)][r] - y01;
            member_loss_[static_cast<std::size_t>(id)] += d * d;
            if (member_loss_[static_cast<std::size_t>(id)] < min_loss_) {
                min_loss_ = member_loss_[static_cast<std::size_t>(id)];
                argmin_ = id;
            }
        }
    }
}

void QueryHistory::append_unqueried(const Point& x) { steps_.push_back(Step{x, false, 0.0}); }

double QueryHistory::loss(const RegressionFunction& f) const {
    if (cls_->kind() == ClassKind::Finite && f.owner.get() == cls_.get() && f.id >= 0)
        return member_loss_[static_cast<std::size_t>(f.id)];
    // sum_r [ n v^2 - 2 s v + s ]  == sum over queried steps of (v - y)^2 for {0,1} targets
    double total = 0.0;
    for (int r = 0; r < cls_->num_points(); ++r) {
        const double n = region_n_[static_cast<std::size_t>(r)];
        if (n == 0.0) continue;
        const double s = region_sy_[static_cast<std::size_t>(r)];
        const double v = f(Point{0.0, r});
        total += n * v * v - 2.0 * s * v + s;
    }
    return total;
}

std::vector<WeightedSample> QueryHistory::compressed_samples() const {
    std::vector<WeightedSample> out;
    for (int r = 0; r < cls_->num_points(); ++r) {
        const double n = region_n_[static_cast<std::size_t>(r)];
        if (n == 0.0) continue;
        const double s = region_sy_[static_cast<std::size_t>(r)];
        if (s > 0.0) out.push_back(WeightedSample{s, Point{0.0, r}, 1.0});
        if (n - s > 0.0) out.push_back(WeightedSample{n - s, Point{0.0, r}, 0.0});
    }
    return out;
}

double empirical_loss(const RegressionFunction& f, const QueryHistory& history) {
    return history.loss(f);
}

bool in_active_set(const RegressionFunction& f, const QueryHistory& history,
                   const RegressionFunction& f_hat, double beta) {
    if (beta < 0.0) throw std::invalid_argument("beta must be nonnegative");
    return history.loss(f) <= history.loss(f_hat) + beta;
}

ConfidenceInterval exact_bounds(const Point& x, const QueryHistory& history, double beta) {
    const ClassPtr& cls = history.function_class();
    if (cls->kind() != ClassKind::Finite)
        throw std::invalid_argument("exact_bounds requires a finite-tabular class");
    const double ball = history.min_loss() + beta;
    const auto r = static_cast<std::size_t>(x.region);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int id = 0; id < cls->size(); ++id) {
        if (history.loss_of_member(id) > ball) continue;
        const double v = cls->table()[static_cast<std::size_t>(id)][r];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    assert(lo <= hi && "active set cannot be empty for beta >= 0");
    return ConfidenceInterval{lo, hi, BoundMode::Exact, 0.0};
}

namespace {

struct ProbeResult {
    double value = 0.0;
    double loss = 0.0;
};

class BoundSolver {
  public:
    BoundSolver(const Point& x, const QueryHistory& history, double beta, double alpha)
        : x_(x), history_(history), cls_(history.function_class()), alpha_(alpha) {
        base_ = history.compressed_samples();
        const RegressionFunction f_hat = call(base_);
        loss_min_ = history.loss(f_hat);
        ball_ = loss_min_ + beta;
        fhat_value_ = f_hat(x_);
    }

    double upper() { return solve(+1); }
    double lower() { return solve(-1); }

  private:
    RegressionFunction call(const std::vector<WeightedSample>& samples) {
        budget_.charge();
        return fit(samples, cls_);
    }

    ProbeResult probe_pull(double w, double target) {
        auto samples = base_;
        samples.push_back(WeightedSample{w, x_, target});
        const RegressionFunction g = call(samples);
        return ProbeResult{g(x_), history_.loss(g)};
    }

    // quadratic pin W (f(x) - c)^2 realized as a {0,1}-target pair
    ProbeResult probe_pin(double c, double w) {
        auto samples = base_;
        if (c > 0.0) samples.push_back(WeightedSample{w * c, x_, 1.0});
        if (c < 1.0) samples.push_back(WeightedSample{w * (1.0 - c), x_, 0.0});
        const RegressionFunction g = call(samples);
        return ProbeResult{g(x_), history_.loss(g)};
    }

    // sign = +1: upper bound, sign = -1: lower bound
    double solve(int sign) {
        budget_.cap = static_cast<std::uint64_t>(
                          std::ceil((1.0 / (alpha_ * alpha_)) * std::log(1.0 / alpha_))) +
                      64;
        budget_.used = 0;
        if (cls_->kind() == ClassKind::Linear) return solve_convex(sign);
        return solve_finite(sign);
    }

    // Convex class: the weighted-fit path traces the Pareto frontier of
    // (loss, value), so bisection on the pull weight is exact up to alpha.
    double solve_convex(int sign) {
        const double target = sign > 0 ? 1.0 : 0.0;
        double w_lo = 0.0;
        double v_lo = fhat_value_;  // feasible side witness
        double w_hi = 1.0;
        ProbeResult hi = probe_pull(w_hi, target);
        int guard = 0;
        while (hi.loss <= ball_ && w_hi < 1e13) {
            w_lo = w_hi;
            v_lo = hi.value;
            w_hi *= 8.0;
            hi = probe_pull(w_hi, target);
            if (++guard > 64) break;
        }
        if (hi.loss <= ball_) {
            // ball never binds: the pull saturates at the class extreme
            return clamp_out(sign, hi.value + sign * 0.5 * alpha_);
        }
        double v_hi = hi.value;  // infeasible side dominates the true bound
        for (int it = 0; it < 300 && std::abs(v_hi - v_lo) > 0.5 * alpha_; ++it) {
            const double w_mid = 0.5 * (w_lo + w_hi);
            const ProbeResult mid = probe_pull(w_mid, target);
            if (mid.loss <= ball_) {
                w_lo = w_mid;
                v_lo = mid.value;
            } else {
                w_hi = w_mid;
                v_hi = mid.value;
            }
        }
        if (std::abs(v_hi - v_lo) > 0.5 * alpha_)
            throw std::runtime_error("approx_bound: weight bisection did not converge");
        return clamp_out(sign, v_lo + sign * 0.5 * alpha_);
    }

    // Finite class: geometric pull sweep for hull witnesses, then a pinned
    // level scan over candidate values. Each pin probe yields the member
    // minimizing L(f) + W (f(x) - c)^2, which certifies that no ball member
    // takes a value inside the sound radius around c; pieces of the scan
    // interval are discarded only under that certificate (or once their
    // residual width is inside the alpha/4 slack). This closes the gap the
    // plain weight sweep leaves on classes whose ball optimum is off the
    // Lagrangian hull.
    double solve_finite(int sign) {
        const double target = sign > 0 ? 1.0 : 0.0;
        double best = fhat_value_;
        auto better = [&](double v) { return sign > 0 ? v > best : v < best; };
        for (double w = 1e-4; w <= 1e10; w *= 4.0) {
            const ProbeResult p = probe_pull(w, target);
            if (p.loss <= ball_ && better(p.value)) best = p.value;
        }
        const double eps_res = 1e-9;
        const double beta_span = std::max(1.0, ball_ - loss_min_);
        const double w_pin = std::min(1e16, 1e12 * beta_span);
        std::vector<std::pair<double, double>> work;
        work.push_back(sign > 0 ? std::pair<double, double>{best, 1.0}
                                : std::pair<double, double>{0.0, best});
        while (!work.empty()) {
            auto [a, b] = work.back();
            work.pop_back();
            if (sign > 0)
                a = std::max(a, best);
            else
                b = std::min(b, best);
            const double width = b - a;
            if (width <= eps_res) continue;
            const double c = 0.5 * (a + b);
            const ProbeResult p = probe_pin(c, w_pin);
            const double r = std::abs(p.value - c);
            const bool in_ball = p.loss <= ball_;
            if (in_ball && better(p.value)) best = p.value;
            const double half = 0.5 * width;
            // any ball member valued inside [a,b] would score at most
            // ball + W half^2 under this pin; if even the optimum scores
            // worse, the piece holds none
            if (p.loss + w_pin * r * r > ball_ + w_pin * half * half) continue;
            // ball witness within pin range of the piece: residual miss is
            // bounded by width + pin radius, inside the alpha/2 output slack
            if (in_ball && width <= 0.25 * alpha_) continue;
            const double slack = std::max(0.0, ball_ - p.loss) + 1e-9 * beta_span;
            const double r_sound = std::sqrt(std::max(0.0, r * r - slack / w_pin));
            const double zone = std::max(r_sound, eps_res);
            subtract(work, a, b, c - zone, c + zone, p.value, eps_res);
        }
        return clamp_out(sign, best + sign * 0.5 * alpha_);
    }

    static void subtract(std::vector<std::pair<double, double>>& work, double a, double b,
                         double zlo, double zhi, double v, double eps) {
        // remove (zlo, zhi) and [v - eps, v + eps] from [a, b]
        std::vector<std::pair<double, double>> zones = {{zlo, zhi}, {v - eps, v + eps}};
        if (zones[0].first > zones[1].first) std::swap(zones[0], zones[1]);
        double cursor = a;
        for (const auto& z : zones) {
            if (z.second < cursor) continue;
            if (z.first > cursor) work.push_back({cursor, std::min(b, z.first)});
            cursor = std::max(cursor, z.second);
            if (cursor >= b) return;
        }
        if (cursor < b) work.push_back({cursor, b});
    }

    static double clamp_out(int sign, double v) {
        return sign > 0 ? std::min(1.0, v) : std::max(0.0, v);
    }

    Point x_;
    const QueryHistory& history_;
    ClassPtr cls_;
    double alpha_;
    std::vector<WeightedSample> base_;
    double loss_min_ = 0.0;
    double ball_ = 0.0;
    double fhat_value_ = 0.0;
    OracleBudget budget_;
};

}  // namespace

double approx_bound(const Point& x, const QueryHistory& history, double beta, double alpha,
                    BoundSide side) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (beta < 0.0) throw std::invalid_argument("beta must be nonnegative");
    BoundSolver solver(x, history, beta, alpha);
    return side == BoundSide::Upper ? solver.upper() : solver.lower();
}

ConfidenceInterval monotone_interval(const Point& x, int epoch, int num_epochs, double gamma,
                                     const QueryHistory& history, double beta) {
    if (epoch < 1 || epoch > num_epochs) throw std::invalid_argument("epoch out of range");
    if (!(gamma > 0.0 && gamma < 0.5)) throw std::invalid_argument("gamma must lie in (0, 1/2)");
    const double alpha_bar = gamma / (4.0 * num_epochs);
    const double pad = static_cast<double>(num_epochs - epoch) * gamma / (4.0 * num_epochs);
    const double lo = approx_bound(x, history, beta, alpha_bar, BoundSide::Lower) - pad;
    const double hi = approx_bound(x, history, beta, alpha_bar, BoundSide::Upper) + pad;
    return ConfidenceInterval{lo, hi, BoundMode::Approximate, alpha_bar + pad};
}

}  // namespace abstain
