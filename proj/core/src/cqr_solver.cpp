#include "odc/cqr_solver.hpp"

#include "odc/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace odc {

double pinball_loss(double u, double tau)
{
    return u * (tau - (u < 0.0 ? 1.0 : 0.0));
}

std::size_t WeightedQRProblem::pseudo_rows() const
{
    return static_cast<std::size_t>(std::count(pseudo.begin(), pseudo.end(), true));
}

double default_pseudo_response(std::span<const double> responses)
{
    const auto [lo, hi] = std::minmax_element(responses.begin(), responses.end());
    return *hi + 100.0 * (*hi - *lo) + 1.0;
}

WeightedQRProblem assemble_problem(const Dataset& d, double tau, const RedistributionWeights& w)
{
    if (!(tau > 0.0 && tau < 1.0))
        throw Error(ErrorKind::InvalidArgument, "tau must lie in (0, 1)");
    if (w.weights.size() != d.size())
        throw Error(ErrorKind::LengthMismatch, "weight vector length differs from dataset size");
    if (w.tau != tau)
        throw Error(ErrorKind::InvalidArgument, "redistribution weights were computed at a different tau");

    WeightedQRProblem prob;
    prob.tau = tau;
    prob.column_names.push_back("(Intercept)");
    for (const auto& n : d.covariate_names())
        prob.column_names.push_back(n);

    const auto times = d.times();
    prob.pseudo_response = default_pseudo_response(times);

    auto push = [&](std::size_t i, double response, double weight, bool pseudo) {
        std::vector<double> row;
        row.reserve(d.dimension() + 1);
        row.push_back(1.0);
        row.insert(row.end(), d[i].covariates.begin(), d[i].covariates.end());
        prob.design.push_back(std::move(row));
        prob.responses.push_back(response);
        prob.weights.push_back(weight);
        prob.source_row.push_back(i);
        prob.pseudo.push_back(pseudo);
    };

    for (std::size_t i = 0; i < d.size(); ++i) {
        const double wi = w.weights[i];
        if (wi < 0.0 || wi > 1.0 || std::isnan(wi))
            throw Error(ErrorKind::InvalidArgument, "redistribution weight outside [0, 1]");
        if (wi >= 1.0) {
            push(i, times[i], 1.0, false);
        } else {
            push(i, times[i], wi, false);
            push(i, prob.pseudo_response, 1.0 - wi, true);
        }
    }
    return prob;
}

double evaluate_objective(const WeightedQRProblem& prob, std::span<const double> beta)
{
    double total = 0.0;
    for (std::size_t i = 0; i < prob.rows(); ++i) {
        double fitted = 0.0;
        for (std::size_t j = 0; j < beta.size(); ++j)
            fitted += prob.design[i][j] * beta[j];
        total += prob.weights[i] * pinball_loss(prob.responses[i] - fitted, prob.tau);
    }
    return total;
}

namespace {

// Modified Gram-Schmidt over the columns of the positively weighted rows.
// Reports the first column that lies in the span of the earlier ones.
void check_rank(const Eigen::MatrixXd& x, const std::vector<std::string>& names)
{
    const Eigen::Index q = x.cols();
    if (x.rows() < q)
        throw Error(ErrorKind::RankDeficientDesign, "fewer positively weighted terms (" +
                                                        std::to_string(x.rows()) + ") than coefficients (" +
                                                        std::to_string(q) + ")");
    double max_norm = 0.0;
    for (Eigen::Index j = 0; j < q; ++j)
        max_norm = std::max(max_norm, x.col(j).norm());
    const double tol = 1e-10 * std::max(max_norm, 1.0);

    Eigen::MatrixXd basis(x.rows(), q);
    Eigen::Index rank = 0;
    for (Eigen::Index j = 0; j < q; ++j) {
        Eigen::VectorXd v = x.col(j);
        for (Eigen::Index k = 0; k < rank; ++k)
            v -= basis.col(k).dot(v) * basis.col(k);
        const double nv = v.norm();
        if (nv <= tol)
            throw Error(ErrorKind::RankDeficientDesign,
                        "column '" + names[static_cast<std::size_t>(j)] + "' is linearly dependent on earlier columns");
        basis.col(rank++) = v / nv;
    }
}

class DualSimplex {
public:
    enum class State { Lower, Upper, Basic };

    DualSimplex(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double tau)
        : x_(x)
        , y_(y)
        , w_(w)
        , tau_(tau)
        , m_(x.rows())
        , q_(x.cols())
        , value_(Eigen::VectorXd::Zero(m_ + q_))
        , upper_(m_ + q_)
        , state_(static_cast<std::size_t>(m_ + q_), State::Lower)
        , sign_(Eigen::VectorXd::Ones(q_))
        , basis_(static_cast<std::size_t>(q_))
    {
        rhs_ = (1.0 - tau_) * (x_.transpose() * w_);
        for (Eigen::Index j = 0; j < m_; ++j)
            upper_[j] = w_[j];
        for (Eigen::Index k = 0; k < q_; ++k)
            upper_[m_ + k] = std::numeric_limits<double>::infinity();
        max_iterations_ = static_cast<std::size_t>(100 * (m_ + q_) + 1000);
    }

    Eigen::VectorXd solve()
    {
        start();
        Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(m_ + q_);
        phase1_cost.tail(q_).setConstant(-1.0);
        run(phase1_cost);

        const double infeasibility = value_.tail(q_).sum();
        if (infeasibility > 1e-8 * std::max(1.0, rhs_.lpNorm<Eigen::Infinity>()))
            throw Error(ErrorKind::Unbounded, "primal objective unbounded (dual phase 1 infeasible)");
        retire_artificials();

        Eigen::VectorXd phase2_cost = Eigen::VectorXd::Zero(m_ + q_);
        phase2_cost.head(m_) = y_;
        run(phase2_cost);

        factor();
        Eigen::VectorXd cb(q_);
        for (Eigen::Index r = 0; r < q_; ++r)
            cb[r] = phase2_cost[basis_[r]];
        return binv_.transpose() * cb;
    }

    std::size_t iterations() const noexcept { return iterations_; }
    std::size_t degenerate_pivots() const noexcept { return degenerate_; }

private:
    Eigen::VectorXd column(Eigen::Index j) const
    {
        if (j < m_)
            return x_.row(j).transpose();
        Eigen::VectorXd e = Eigen::VectorXd::Zero(q_);
        e[j - m_] = sign_[j - m_];
        return e;
    }

    void start()
    {
        // Warm start: guess the intercept-only tau-quantile and place every
        // term at the bound matching the sign of its residual.
        std::vector<double> sorted(y_.data(), y_.data() + m_);
        const auto k = static_cast<std::size_t>(std::floor(tau_ * static_cast<double>(m_ - 1)));
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
        const double guess = sorted[k];

        Eigen::VectorXd residual = rhs_;
        for (Eigen::Index j = 0; j < m_; ++j) {
            if (y_[j] > guess) {
                state_[j] = State::Upper;
                value_[j] = upper_[j];
                residual -= x_.row(j).transpose() * upper_[j];
            } else {
                state_[j] = State::Lower;
                value_[j] = 0.0;
            }
        }
        for (Eigen::Index k2 = 0; k2 < q_; ++k2) {
            sign_[k2] = residual[k2] >= 0.0 ? 1.0 : -1.0;
            value_[m_ + k2] = std::abs(residual[k2]);
            state_[m_ + k2] = State::Basic;
            basis_[k2] = m_ + k2;
        }
    }

    void factor()
    {
        Eigen::MatrixXd b(q_, q_);
        for (Eigen::Index r = 0; r < q_; ++r)
            b.col(r) = column(basis_[r]);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(b);
        if (!lu.isInvertible())
            throw Error(ErrorKind::RankDeficientDesign, "simplex basis became singular");
        binv_ = lu.inverse();
    }

    // Basic values from the nonbasic ones; avoids drift from incremental updates.
    void refresh_basic_values()
    {
        Eigen::VectorXd r = rhs_;
        for (Eigen::Index j = 0; j < m_; ++j) {
            if (state_[j] != State::Basic && value_[j] != 0.0)
                r.noalias() -= x_.row(j).transpose() * value_[j];
        }
        for (Eigen::Index k = 0; k < q_; ++k) {
            if (state_[m_ + k] != State::Basic)
                r[k] -= sign_[k] * value_[m_ + k];
        }
        const Eigen::VectorXd vb = binv_ * r;
        for (Eigen::Index row = 0; row < q_; ++row)
            value_[basis_[row]] = vb[row];
    }

    void run(const Eigen::VectorXd& cost)
    {
        const double rc_tol = 1e-11 * std::max(1.0, cost.lpNorm<Eigen::Infinity>());
        constexpr double pivot_tol = 1e-11;
        constexpr double ratio_tie = 1e-12;
        std::size_t degenerate_run = 0;

        while (true) {
            if (++iterations_ > max_iterations_)
                throw Error(ErrorKind::IterationLimit, "simplex did not converge within " +
                                                           std::to_string(max_iterations_) + " iterations");
            factor();
            refresh_basic_values();

            Eigen::VectorXd cb(q_);
            for (Eigen::Index r = 0; r < q_; ++r)
                cb[r] = cost[basis_[r]];
            const Eigen::VectorXd pi = binv_.transpose() * cb;

            const bool bland = degenerate_run > 50;
            Eigen::Index entering = -1;
            double best = 0.0;
            for (Eigen::Index j = 0; j < m_ + q_; ++j) {
                if (state_[j] == State::Basic || !(upper_[j] > 0.0))
                    continue;
                const double rc = cost[j] - (j < m_ ? x_.row(j).dot(pi) : sign_[j - m_] * pi[j - m_]);
                double gain = 0.0;
                if (state_[j] == State::Lower && rc > rc_tol)
                    gain = rc;
                else if (state_[j] == State::Upper && rc < -rc_tol)
                    gain = -rc;
                if (gain <= 0.0)
                    continue;
                if (bland) {
                    entering = j;
                    break;
                }
                if (gain > best) {
                    best = gain;
                    entering = j;
                }
            }
            if (entering < 0)
                return;

            const double dir = state_[entering] == State::Lower ? 1.0 : -1.0;
            const Eigen::VectorXd alpha = binv_ * column(entering);

            // basic value in row r moves by -dir * alpha[r] * t
            double t_min = std::numeric_limits<double>::infinity();
            Eigen::Index leave_row = -1;
            bool leave_to_upper = false;
            for (Eigen::Index r = 0; r < q_; ++r) {
                const double delta = -dir * alpha[r];
                if (std::abs(delta) <= pivot_tol)
                    continue;
                const Eigen::Index var = basis_[r];
                double limit;
                bool to_upper;
                if (delta < 0.0) {
                    limit = std::max(0.0, value_[var]) / -delta;
                    to_upper = false;
                } else {
                    if (!std::isfinite(upper_[var]))
                        continue;
                    limit = std::max(0.0, upper_[var] - value_[var]) / delta;
                    to_upper = true;
                }
                const bool better = limit < t_min - ratio_tie;
                const bool tie = !better && limit <= t_min + ratio_tie && leave_row >= 0 && var < basis_[leave_row];
                if (better || tie) {
                    t_min = std::min(limit, t_min);
                    leave_row = r;
                    leave_to_upper = to_upper;
                }
            }

            const double range = upper_[entering];
            if (range <= t_min + ratio_tie && std::isfinite(range)) {
                // bound flip, basis unchanged
                value_[entering] = dir > 0.0 ? range : 0.0;
                state_[entering] = dir > 0.0 ? State::Upper : State::Lower;
                degenerate_run = 0;
                continue;
            }
            if (leave_row < 0)
                throw Error(ErrorKind::Unbounded, "ratio test found no blocking variable");

            if (t_min <= ratio_tie) {
                ++degenerate_;
                ++degenerate_run;
            } else {
                degenerate_run = 0;
            }

            const Eigen::Index leaving = basis_[leave_row];
            value_[entering] += dir * t_min;
            state_[entering] = State::Basic;
            basis_[leave_row] = entering;
            state_[leaving] = leave_to_upper ? State::Upper : State::Lower;
            value_[leaving] = leave_to_upper ? upper_[leaving] : 0.0;
        }
    }

    void retire_artificials()
    {
        for (Eigen::Index k = 0; k < q_; ++k)
            upper_[m_ + k] = 0.0;
        for (Eigen::Index k = 0; k < q_; ++k) {
            const Eigen::Index var = m_ + k;
            if (state_[var] != State::Basic) {
                state_[var] = State::Lower;
                value_[var] = 0.0;
            }
        }
        factor();
        for (Eigen::Index r = 0; r < q_; ++r) {
            const Eigen::Index var = basis_[r];
            if (var < m_)
                continue;
            const Eigen::RowVectorXd row = binv_.row(r);
            Eigen::Index replacement = -1;
            for (Eigen::Index j = 0; j < m_; ++j) {
                if (state_[j] != State::Basic && std::abs(row.dot(x_.row(j))) > 1e-9) {
                    replacement = j;
                    break;
                }
            }
            if (replacement < 0)
                throw Error(ErrorKind::RankDeficientDesign, "design rows do not span the coefficient space");
            state_[replacement] = State::Basic;
            basis_[r] = replacement;
            state_[var] = State::Lower;
            value_[var] = 0.0;
            factor();
        }
    }

    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
    Eigen::VectorXd w_;
    double tau_;
    Eigen::Index m_;
    Eigen::Index q_;
    Eigen::VectorXd rhs_;
    Eigen::VectorXd value_;
    Eigen::VectorXd upper_;
    std::vector<State> state_;
    Eigen::VectorXd sign_;
    std::vector<Eigen::Index> basis_;
    Eigen::MatrixXd binv_;
    std::size_t iterations_ = 0;
    std::size_t degenerate_ = 0;
    std::size_t max_iterations_ = 0;
};

QuantileFit solve_once(const WeightedQRProblem& prob)
{
    const std::size_t q = prob.columns();
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < prob.rows(); ++i) {
        if (prob.design[i].size() != q)
            throw Error(ErrorKind::DimensionMismatch, "design row " + std::to_string(i) + " has wrong width");
        if (prob.weights[i] < 0.0 || !std::isfinite(prob.weights[i]) || !std::isfinite(prob.responses[i]))
            throw Error(ErrorKind::InvalidArgument, "weights must be finite and non-negative");
        if (prob.weights[i] > 0.0)
            active.push_back(i);
    }

    const auto m = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd x(m, static_cast<Eigen::Index>(q));
    Eigen::VectorXd y(m);
    Eigen::VectorXd w(m);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index r = 0; r < m; ++r) {
        const std::size_t i = active[static_cast<std::size_t>(r)];
        for (std::size_t j = 0; j < q; ++j)
            x(r, static_cast<Eigen::Index>(j)) = prob.design[i][j];
        y[r] = prob.responses[i];
        w[r] = prob.weights[i];
        if (!prob.pseudo[i]) {
            lo = std::min(lo, y[r]);
            hi = std::max(hi, y[r]);
        }
    }
    check_rank(x, prob.column_names);

    // Standardize responses so tolerances are scale free.
    const double shift = std::isfinite(lo) ? lo : 0.0;
    const double scale = (std::isfinite(hi) && hi > lo) ? hi - lo : 1.0;
    const Eigen::VectorXd ys = (y.array() - shift) / scale;

    DualSimplex simplex(x, ys, w, prob.tau);
    const Eigen::VectorXd beta_std = simplex.solve();

    QuantileFit fit;
    fit.tau = prob.tau;
    fit.beta.resize(q);
    for (std::size_t j = 0; j < q; ++j)
        fit.beta[j] = scale * beta_std[static_cast<Eigen::Index>(j)];
    fit.beta[0] += shift;
    for (double b : fit.beta) {
        if (!std::isfinite(b))
            throw Error(ErrorKind::Unbounded, "non-finite coefficient");
    }
    fit.objective = evaluate_objective(prob, fit.beta);
    fit.pseudo_response = prob.pseudo_response;
    fit.diagnostics.iterations = simplex.iterations();
    fit.diagnostics.degenerate_pivots = simplex.degenerate_pivots();
    return fit;
}

bool pseudo_rows_above_fit(const WeightedQRProblem& prob, const QuantileFit& fit)
{
    for (std::size_t i = 0; i < prob.rows(); ++i) {
        if (!prob.pseudo[i] || prob.weights[i] <= 0.0)
            continue;
        double fitted = 0.0;
        for (std::size_t j = 0; j < fit.beta.size(); ++j)
            fitted += prob.design[i][j] * fit.beta[j];
        if (!(prob.responses[i] - fitted > 0.0))
            return false;
    }
    return true;
}

} // namespace

QuantileFit solve_weighted_qr(const WeightedQRProblem& prob)
{
    if (!(prob.tau > 0.0 && prob.tau < 1.0))
        throw Error(ErrorKind::InvalidArgument, "tau must lie in (0, 1)");
    if (prob.columns() == 0)
        throw Error(ErrorKind::InvalidArgument, "problem has no columns");
    if (prob.design.size() != prob.rows() || prob.weights.size() != prob.rows() ||
        prob.pseudo.size() != prob.rows())
        throw Error(ErrorKind::LengthMismatch, "problem arrays have inconsistent lengths");

    QuantileFit fit = solve_once(prob);
    if (prob.pseudo_rows() == 0)
        return fit;

    double real_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < prob.rows(); ++i) {
        if (!prob.pseudo[i])
            real_max = std::max(real_max, prob.responses[i]);
    }

    WeightedQRProblem retry = prob;
    std::size_t attempts = 0;
    while (!pseudo_rows_above_fit(retry, fit)) {
        if (attempts == 3)
            throw Error(ErrorKind::PseudoPointUnstable,
                        "fitted quantile reaches the pseudo response Y* even after 3 enlargements");
        ++attempts;
        retry.pseudo_response = real_max + 10.0 * (retry.pseudo_response - real_max);
        for (std::size_t i = 0; i < retry.rows(); ++i) {
            if (retry.pseudo[i])
                retry.responses[i] = retry.pseudo_response;
        }
        const std::size_t prior_iterations = fit.diagnostics.iterations;
        fit = solve_once(retry);
        fit.diagnostics.iterations += prior_iterations;
    }
    fit.diagnostics.pseudo_retries = attempts;
    return fit;
}

QuantileFit fit_cqr(const Dataset& d, double tau, const ObservedCdf& cdf)
{
    if (d.dimension() > 0 && !d.is_scaled())
        throw Error(ErrorKind::InvalidArgument, "fit_cqr requires scaled covariates");
    const auto weights = redistribution_weights(d, tau, cdf);
    const auto prob = assemble_problem(d, tau, weights);
    QuantileFit fit = solve_weighted_qr(prob);
    fit.beta = d.unscale_coefficients(fit.beta);
    fit.diagnostics.neighborhood_fallbacks = cdf.neighborhood_fallbacks;
    return fit;
}

QuantileFit fit_cqr(const Dataset& d, double tau, BandwidthConfig bw)
{
    if (!(tau > 0.0 && tau < 1.0))
        throw Error(ErrorKind::InvalidArgument, "tau must lie in (0, 1)");
    return fit_cqr(d, tau, local_cdf_at_censored(d, bw));
}

std::vector<QuantileFit> fit_cqr_levels(const Dataset& d, std::span<const double> taus, BandwidthConfig bw)
{
    const auto cdf = local_cdf_at_censored(d, bw);
    std::vector<QuantileFit> fits;
    fits.reserve(taus.size());
    for (double tau : taus)
        fits.push_back(fit_cqr(d, tau, cdf));
    return fits;
}

double predict_quantile(const QuantileFit& fit, std::span<const double> x)
{
    if (fit.beta.size() != x.size() + 1)
        throw Error(ErrorKind::DimensionMismatch, "covariate vector has " + std::to_string(x.size()) +
                                                      " entries, fit expects " +
                                                      std::to_string(fit.beta.size() - 1));
    double value = fit.beta[0];
    for (std::size_t j = 0; j < x.size(); ++j)
        value += fit.beta[j + 1] * x[j];
    return value;
}

std::vector<double> predict_rows(const QuantileFit& fit, const Dataset& d)
{
    std::vector<double> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        out[i] = predict_quantile(fit, d.raw_covariates(i));
    return out;
}

} // namespace odc
