#include "swce/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace swce {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kHalfLogPi = 0.5 * std::log(kPi);

struct Term {
    double log = 0.0;
    double score = 0.0;
    double curvature = 0.0;
};

// Log-probability of real component r and its derivatives in the mean.
Term term(const QuantizedObservation& obs, Eigen::Index r, double mu) {
    if (obs.unquantized()) {
        const double e = obs.lower(r) - mu;
        return {-e * e - kHalfLogPi, 2.0 * e, -2.0};
    }
    const CensoredJet j = censored_jet(obs.lower(r), obs.upper(r), mu, kNoiseStd);
    return {j.log_prob, j.score, j.curvature};
}

double component(const VectorXcd& mean, Eigen::Index r) {
    const Eigen::Index n = mean.size();
    return r < n ? mean(r).real() : mean(r - n).imag();
}

// Re tr(X^H Y).
double inner(const MatrixXcd& x, const MatrixXcd& y) { return (x.conjugate().cwiseProduct(y)).sum().real(); }

}  // namespace

double loglik(const VectorXcd& mean, const QuantizedObservation& obs, const std::vector<Eigen::Index>& real_subset) {
    if (mean.size() != obs.samples()) throw Error("loglik: mean has the wrong length");
    double total = 0.0;
    for (Eigen::Index r : real_subset) total += term(obs, r, component(mean, r)).log;
    return total;
}

double loglik(const VectorXcd& x, const MatrixXcd& atoms, const QuantizedObservation& obs,
              const std::vector<Eigen::Index>& real_subset) {
    if (atoms.cols() == 0) return loglik(VectorXcd::Zero(obs.samples()), obs, real_subset);
    return loglik(VectorXcd(atoms * x), obs, real_subset);
}

VectorXcd likelihood_score(const VectorXcd& mean, const QuantizedObservation& obs,
                           const std::vector<Eigen::Index>& rows) {
    const Eigen::Index n = obs.samples();
    VectorXcd omega = VectorXcd::Zero(n);
    for (Eigen::Index i : rows)
        omega(i) = cplx(term(obs, i, mean(i).real()).score, term(obs, i + n, mean(i).imag()).score);
    return omega;
}

// ---------------------------------------------------------------------------

double GridSpec::angle_cell() const { return kPi / static_cast<double>(thetas.size()); }

double GridSpec::delay_cell_symbols(double ts) const {
    if (taus.size() < 2) return 0.0;
    return (taus.back() - taus.front()) / ts / static_cast<double>(taus.size() - 1);
}

GridSpec make_grid(const SystemConfig& cfg) {
    const TapSupport s = tap_support(cfg);
    const int ga = cfg.grid_angle_res * cfg.antennas;
    const int gd = cfg.grid_delay_res * s.size();
    GridSpec g;
    g.users = cfg.users;
    g.thetas.resize(static_cast<std::size_t>(ga));
    for (int i = 0; i < ga; ++i) g.thetas[i] = -kPi / 2.0 + (i + 0.5) * kPi / ga;
    const double max_delay = (cfg.delay_spread - 1) * cfg.symbol_period();
    if (cfg.delay_spread == 1) {
        g.taus = {0.0};
    } else {
        g.taus.resize(static_cast<std::size_t>(gd));
        for (int i = 0; i < gd; ++i) g.taus[i] = max_delay * i / (gd - 1);
    }
    return g;
}

// ---------------------------------------------------------------------------

AtomGeometry::AtomGeometry(const SensingOperator& op, const std::vector<int>& frames, AtomModel model)
    : op_(&op), model_(model), p_(op.combiner_energy(frames)) {
    for (int k = 0; k < op.config().users; ++k) t_.push_back(op.training_gram(k));
}

double AtomGeometry::energy(const MatrixXcd& v, int user) const {
    return inner(v, p_ * v * t_[static_cast<std::size_t>(user)]);
}

SelectionObjective::SelectionObjective(const AtomGeometry& geometry, const VectorXcd& omega, bool normalize)
    : geo_(&geometry), normalize_(normalize) {
    const SystemConfig& cfg = geometry.op().config();
    const VectorXcd z = geometry.op().adjoint(omega);
    z_ = Eigen::Map<const MatrixXcd>(z.data(), cfg.antennas, z.size() / cfg.antennas);
}

cplx SelectionObjective::correlate(const MatrixXcd& v, int user) const {
    const int users = geo_->op().config().users;
    cplx c = 0.0;
    for (Eigen::Index j = 0; j < v.cols(); ++j) c += v.col(j).dot(z_.col(j * users + user));
    return c;
}

double SelectionObjective::value_from_block(const MatrixXcd& v, int user, double energy) const {
    const double n = std::norm(correlate(v, user));
    if (!normalize_) return n;
    return energy > 0.0 ? n / energy : 0.0;
}

double SelectionObjective::value(double theta, double tau, int user) const {
    const SteeringBlock b = steering_block(theta, tau, geo_->op().config(), geo_->op().training().support,
                                           geo_->model(), 0);
    return value_from_block(b.v, user, normalize_ ? geo_->energy(b.v, user) : 1.0);
}

ObjectiveJet SelectionObjective::jet(double theta, double tau, int user) const {
    const SteeringBlock b = steering_block(theta, tau, geo_->op().config(), geo_->op().training().support,
                                           geo_->model(), 2);
    const cplx c = correlate(b.v, user);
    const cplx ct = correlate(b.d_theta, user);
    const cplx cu = correlate(b.d_u, user);
    const cplx ctt = correlate(b.d_theta_theta, user);
    const cplx ctu = correlate(b.d_theta_u, user);
    const cplx cuu = correlate(b.d_u_u, user);

    // N = |c|^2 and its derivatives.
    const double n0 = std::norm(c);
    const double nt = 2.0 * (std::conj(c) * ct).real();
    const double nu = 2.0 * (std::conj(c) * cu).real();
    const double ntt = 2.0 * (std::norm(ct) + (std::conj(c) * ctt).real());
    const double ntu = 2.0 * ((std::conj(cu) * ct).real() + (std::conj(c) * ctu).real());
    const double nuu = 2.0 * (std::norm(cu) + (std::conj(c) * cuu).real());

    ObjectiveJet out;
    if (!normalize_) {
        out.value = n0;
        out.grad << nt, nu;
        out.hess << ntt, ntu, ntu, nuu;
        return out;
    }

    // e = tr(V^H P V T) and its derivatives.
    const MatrixXcd& p = geo_->combiner_energy();
    const MatrixXcd& t = geo_->training_gram(user);
    const MatrixXcd pvt = p * b.v * t;
    const MatrixXcd pvtt = p * b.d_theta * t;
    const MatrixXcd pvtu = p * b.d_u * t;
    const double e0 = inner(b.v, pvt);
    const double et = 2.0 * inner(b.d_theta, pvt);
    const double eu = 2.0 * inner(b.d_u, pvt);
    const double ett = 2.0 * (inner(b.d_theta_theta, pvt) + inner(b.d_theta, pvtt));
    const double etu = 2.0 * (inner(b.d_theta_u, pvt) + inner(b.d_theta, pvtu));
    const double euu = 2.0 * (inner(b.d_u_u, pvt) + inner(b.d_u, pvtu));
    if (!(e0 > 0.0)) return out;

    // F = N / e.
    const double f = n0 / e0;
    const double ft = (nt - f * et) / e0;
    const double fu = (nu - f * eu) / e0;
    out.value = f;
    out.grad << ft, fu;
    const double ftt = (ntt - 2.0 * ft * et - f * ett) / e0;
    const double ftu = (ntu - ft * eu - fu * et - f * etu) / e0;
    const double fuu = (nuu - 2.0 * fu * eu - f * euu) / e0;
    out.hess << ftt, ftu, ftu, fuu;
    return out;
}

GridDictionary::GridDictionary(const AtomGeometry& geometry, const GridSpec& grid) : grid_(grid) {
    const SystemConfig& cfg = geometry.op().config();
    const TapSupport& s = geometry.op().training().support;
    blocks_.reserve(grid.thetas.size() * grid.taus.size());
    for (double th : grid.thetas)
        for (double tau : grid.taus) blocks_.push_back(steering_block(th, tau, cfg, s, geometry.model(), 0).v);
    energies_.resize(static_cast<std::size_t>(grid.users) * blocks_.size());
    for (int k = 0; k < grid.users; ++k)
        for (std::size_t i = 0; i < blocks_.size(); ++i)
            energies_[static_cast<std::size_t>(k) * blocks_.size() + i] = geometry.energy(blocks_[i], k);
}

GridPoint grid_select(const SelectionObjective& objective, const GridDictionary& dict) {
    const GridSpec& g = dict.grid();
    GridPoint best;
    best.value = -kInf;
    for (int k = 0; k < g.users; ++k)
        for (std::size_t a = 0; a < g.thetas.size(); ++a)
            for (std::size_t d = 0; d < g.taus.size(); ++d) {
                const double v = objective.value_from_block(dict.block(a, d), k, dict.energy(k, a, d));
                if (v > best.value) best = {g.thetas[a], g.taus[d], k, v};
            }
    return best;
}

// ---------------------------------------------------------------------------

RefineResult refine(const SelectionObjective& objective, const GridPoint& start, const GridSpec& grid,
                    const RefinementConfig& rcfg) {
    const SystemConfig& cfg = objective.geometry().op().config();
    const double ts = cfg.symbol_period();
    const double u_max = cfg.delay_spread - 1;
    const bool freeze_u = u_max <= 0.0;
    const double cell_theta = grid.angle_cell();
    const double cell_u = freeze_u ? 0.0 : std::max(grid.delay_cell_symbols(ts), 1e-12);

    RefineResult out;
    double theta = start.theta;
    double u = start.tau / ts;
    ObjectiveJet cur = objective.jet(theta, u * ts, start.user);
    out.start_value = cur.value;

    for (int it = 0; it < rcfg.max_iterations; ++it) {
        Eigen::Vector2d g = cur.grad;
        Eigen::Matrix2d h = cur.hess;
        if (freeze_u) {
            g(1) = 0.0;
            h(0, 1) = h(1, 0) = 0.0;
            h(1, 1) = -1.0;  // any negative value; the u step is zeroed below
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(h, Eigen::EigenvaluesOnly);
        const double scale = std::abs(h(0, 0)) + (freeze_u ? 0.0 : std::abs(h(1, 1)));
        const double lmin = eig.eigenvalues()(0);
        const double lmax = eig.eigenvalues()(1);
        const bool newton = lmax < -1e-12 * scale && std::abs(lmin) <= 1e12 * std::abs(lmax);

        Eigen::Vector2d step = newton ? Eigen::Vector2d(-h.inverse() * g) : g;
        if (freeze_u) step(1) = 0.0;
        if (!step.allFinite() || step.norm() == 0.0) break;
        double shrink = 1.0;
        if (std::abs(step(0)) > cell_theta) shrink = std::min(shrink, cell_theta / std::abs(step(0)));
        if (!freeze_u && std::abs(step(1)) > cell_u) shrink = std::min(shrink, cell_u / std::abs(step(1)));
        step *= shrink;

        double eta = rcfg.eta;
        bool accepted = false;
        double cand_theta = theta, cand_u = u, cand_value = cur.value;
        for (int k = 0; k <= rcfg.max_halvings; ++k) {
            cand_theta = std::clamp(theta + eta * step(0), -kPi / 2.0, kPi / 2.0);
            cand_u = freeze_u ? 0.0 : std::clamp(u + eta * step(1), 0.0, u_max);
            cand_value = objective.value(cand_theta, cand_u * ts, start.user);
            if (cand_value >= cur.value) {
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        out.newton_steps.push_back(newton);
        ++out.iterations;
        if (!accepted) break;
        const double gain = cand_value - cur.value;
        theta = cand_theta;
        u = cand_u;
        cur = objective.jet(theta, u * ts, start.user);
        if (gain <= rcfg.relative_tolerance * std::max(std::abs(cur.value), 1e-300)) break;
    }
    out.theta = theta;
    out.tau = u * ts;
    out.value = cur.value;
    return out;
}

VectorXcd map_path_gains(const MatrixXcd& atoms, const QuantizedObservation& obs, const std::vector<Eigen::Index>& rows,
                         const RefinementConfig& rcfg, const VectorXcd& start) {
    const Eigen::Index p = atoms.cols();
    if (p == 0) return VectorXcd();
    const Eigen::Index rn = obs.samples();
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());

    MatrixXcd ae(n, p);
    for (Eigen::Index i = 0; i < n; ++i) ae.row(i) = atoms.row(rows[static_cast<std::size_t>(i)]);
    const MatrixXd ar = real_form(ae);
    std::vector<Eigen::Index> real_rows(static_cast<std::size_t>(2 * n));
    for (Eigen::Index i = 0; i < n; ++i) {
        real_rows[static_cast<std::size_t>(i)] = rows[static_cast<std::size_t>(i)];
        real_rows[static_cast<std::size_t>(i + n)] = rows[static_cast<std::size_t>(i)] + rn;
    }

    VectorXd x = VectorXd::Zero(2 * p);
    if (start.size() > 0) {
        const Eigen::Index m = std::min(start.size(), p);
        x.head(m) = start.head(m).real();
        x.segment(p, m) = start.head(m).imag();
    }

    auto objective = [&](const VectorXd& xr) {
        const VectorXd mu = ar * xr;
        double total = -xr.squaredNorm();
        for (Eigen::Index i = 0; i < 2 * n; ++i) total += term(obs, real_rows[static_cast<std::size_t>(i)], mu(i)).log;
        return total;
    };

    const int budget = 10 * rcfg.gain_max_iterations;
    double fx = objective(x);
    for (int it = 0; it < budget; ++it) {
        const VectorXd mu = ar * x;
        VectorXd s(2 * n), c(2 * n);
        for (Eigen::Index i = 0; i < 2 * n; ++i) {
            const Term t = term(obs, real_rows[static_cast<std::size_t>(i)], mu(i));
            s(i) = t.score;
            c(i) = t.curvature;
        }
        const VectorXd grad = ar.transpose() * s - 2.0 * x;
        MatrixXd neg_h = ar.transpose() * (-c).asDiagonal() * ar;
        neg_h.diagonal().array() += 2.0;
        const Eigen::LLT<MatrixXd> llt(neg_h);
        const VectorXd delta = llt.solve(grad);
        const double decrement = grad.dot(delta);
        if (!(decrement >= 0.0) || !delta.allFinite()) break;
        if (decrement / 2.0 < rcfg.gain_tolerance) return complex_form(x);
        double t = 1.0;
        double fn = objective(x + t * delta);
        while (fn < fx + 0.25 * t * decrement && t > 1e-12) {
            t *= 0.5;
            fn = objective(x + t * delta);
        }
        if (fn < fx) break;
        x += t * delta;
        fx = fn;
    }
    throw GainSolveError("map_path_gains: no convergence for " + std::to_string(p) + " paths", complex_form(x));
}

// ---------------------------------------------------------------------------

double cv_score(const EstimateState& state, const QuantizedObservation& obs) {
    if (state.paths.empty()) return -kInf;
    return loglik(state.mean, obs, obs.partition.cv_real());
}

VectorXcd reconstruct_h(const std::vector<PathParams>& paths, const SystemConfig& cfg, AtomModel model) {
    return build_channel(paths, cfg, model).h;
}

VectorXcd reconstruct_h(const EstimateState& state, const SystemConfig& cfg, AtomModel model) {
    return reconstruct_h(state.paths, cfg, model);
}

EstimateResult nfcfgs_cv(const SensingOperator& op, const QuantizedObservation& obs, const GridSpec& grid,
                         EstimatorOptions options) {
    const SystemConfig& cfg = op.config();
    const DataPartition& part = obs.partition;
    if (part.samples != op.rows() || obs.samples() != op.rows())
        throw Error("nfcfgs_cv: observation does not match the sensing operator");
    if (grid.thetas.empty() || grid.taus.empty() || grid.users < 1) throw Error("nfcfgs_cv: empty grid");

    const std::vector<Eigen::Index> est_real = part.estimation_real();
    const std::vector<Eigen::Index> cv_real = part.cv_real();
    const AtomGeometry geometry(op, part.estimation_frames, options.model);
    const GridDictionary dict(geometry, grid);
    const double ts = cfg.symbol_period();

    int cap = options.max_paths;
    if (cap <= 0)
        cap = std::max(1, static_cast<int>(std::min<long long>(static_cast<long long>(part.estimation.size()) / 4,
                                                               4LL * cfg.total_paths())));

    EstimateResult result;
    EstimateState state;
    state.mean = VectorXcd::Zero(op.rows());
    EstimateState best = state;
    MatrixXcd atoms(op.rows(), 0);

    while (true) {
        if (options.forced_iterations ? result.iterations >= *options.forced_iterations : result.iterations >= cap)
            break;
        const double previous = state.cv_score;

        const SelectionObjective objective(geometry, likelihood_score(state.mean, obs, part.estimation),
                                           options.normalize_atoms);
        const GridPoint gp = grid_select(objective, dict);
        double theta = gp.theta;
        double tau = gp.tau;
        int refine_iterations = 0;
        if (options.refine) {
            const RefineResult rr = refine(objective, gp, grid, options.rcfg);
            theta = rr.theta;
            tau = rr.tau;
            refine_iterations = rr.iterations;
        }
        const bool duplicate = std::any_of(state.paths.begin(), state.paths.end(), [&](const PathParams& q) {
            return q.user == gp.user && std::abs(q.theta - theta) < 1e-9 && std::abs(q.tau - tau) / ts < 1e-9;
        });
        if (duplicate) break;
        ++result.iterations;

        atoms.conservativeResize(Eigen::NoChange, atoms.cols() + 1);
        atoms.col(atoms.cols() - 1) = op.atom(theta, tau, gp.user, options.model);
        const VectorXcd x = map_path_gains(atoms, obs, part.estimation, options.rcfg, state.gains);

        EstimateState next;
        next.paths = state.paths;
        next.paths.push_back(PathParams{cplx(0.0, 0.0), theta, tau, gp.user});
        for (std::size_t i = 0; i < next.paths.size(); ++i) next.paths[i].gain = x(static_cast<Eigen::Index>(i));
        next.gains = x;
        next.mean = atoms * x;
        next.cv_score = loglik(next.mean, obs, cv_real);
        next.log_posterior = loglik(next.mean, obs, est_real) - x.squaredNorm();
        next.cv_history = state.cv_history;
        next.cv_history.push_back(next.cv_score);

        result.trace.push_back({next.paths, next.cv_score, next.log_posterior, refine_iterations});
        const bool improved = next.cv_score > previous;
        state = std::move(next);
        if (improved && state.cv_score > best.cv_score) best = state;
        if (!options.forced_iterations && !improved) break;
    }
    result.state = std::move(best);
    return result;
}

EstimateResult fcfgs_cv(const SensingOperator& op, const QuantizedObservation& obs, const GridSpec& grid,
                        EstimatorOptions options) {
    options.refine = false;
    return nfcfgs_cv(op, obs, grid, options);
}

}  // namespace swce
