// Quantized-likelihood channel estimation: grid selection of the path whose
// atom best matches the likelihood gradient, Newton refinement of its angle
// and delay, concave MAP refit of all path gains, and held-out likelihood
// termination (NFCFGS-CV). Skipping the refinement gives FCFGS-CV.

#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "swce/frontend.hpp"

namespace swce {

// ---------------------------------------------------------------------------
// Likelihood

/// Per-sample real noise standard deviation, sqrt(1/2).
inline constexpr double kNoiseStd = 0.70710678118654752440;

/// Log-likelihood of the observation restricted to `real_subset` (indices
/// into the 2RN real form) when the unquantized mean is `mean` (length RN).
/// Unquantized observations use the Gaussian density with variance 1/2.
double loglik(const VectorXcd& mean, const QuantizedObservation& obs, const std::vector<Eigen::Index>& real_subset);

/// Same with mean = atoms * x.
double loglik(const VectorXcd& x, const MatrixXcd& atoms, const QuantizedObservation& obs,
              const std::vector<Eigen::Index>& real_subset);

/// d loglik / d mean on the given complex rows packed as score_re + j score_im;
/// zero elsewhere.
VectorXcd likelihood_score(const VectorXcd& mean, const QuantizedObservation& obs,
                           const std::vector<Eigen::Index>& rows);

// ---------------------------------------------------------------------------
// Grid

/// Uniform grid over the angle-delay box. Angles are cell midpoints
/// -pi/2 + (i + 1/2) pi / G_a; delays span [0, (D-1) T_s] inclusively.
struct GridSpec {
    std::vector<double> thetas;
    std::vector<double> taus;
    int users = 1;

    double angle_cell() const;
    /// Cell width in units of T_s (0 when the delay axis is a single point).
    double delay_cell_symbols(double ts) const;
};

GridSpec make_grid(const SystemConfig& cfg);

struct GridPoint {
    double theta = 0.0;
    double tau = 0.0;
    int user = 0;
    double value = 0.0;
};

// ---------------------------------------------------------------------------
// Selection objective

/// Quantities of the sensing geometry that do not depend on the data: the
/// combiner energy over the estimation frames and the per-user training Gram
/// matrices, used for atom energies.
class AtomGeometry {
public:
    AtomGeometry(const SensingOperator& op, const std::vector<int>& frames, AtomModel model);

    /// ||a_E||^2 for the atom with steering block v (M x |D|) of user k.
    double energy(const MatrixXcd& v, int user) const;

    const SensingOperator& op() const { return *op_; }
    AtomModel model() const { return model_; }
    const MatrixXcd& combiner_energy() const { return p_; }
    const MatrixXcd& training_gram(int user) const { return t_[static_cast<std::size_t>(user)]; }

private:
    const SensingOperator* op_;
    AtomModel model_;
    MatrixXcd p_;
    std::vector<MatrixXcd> t_;
};

struct ObjectiveJet {
    double value = 0.0;
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();  // d/dtheta, d/du with u = tau / T_s
    Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
};

/// f(theta, tau, k) = |a^H omega|^2 with omega the likelihood score at the
/// current residual mean, restricted to the estimation rows. With
/// `normalize` the value is divided by the atom energy ||a_E||^2, which makes
/// the maximiser in the noiseless Gaussian case the true atom.
class SelectionObjective {
public:
    SelectionObjective(const AtomGeometry& geometry, const VectorXcd& omega, bool normalize = true);

    double value(double theta, double tau, int user) const;
    /// Value from a precomputed steering block and atom energy.
    double value_from_block(const MatrixXcd& v, int user, double energy) const;
    /// Value, gradient and Hessian in (theta, u = tau / T_s).
    ObjectiveJet jet(double theta, double tau, int user) const;

    bool normalized() const { return normalize_; }
    const AtomGeometry& geometry() const { return *geo_; }

private:
    cplx correlate(const MatrixXcd& v, int user) const;

    const AtomGeometry* geo_;
    MatrixXcd z_;  // A_E^H omega reshaped to M x |D|K
    bool normalize_;
};

/// Steering blocks and atom energies for every grid point, computed once per
/// estimation run.
class GridDictionary {
public:
    GridDictionary(const AtomGeometry& geometry, const GridSpec& grid);

    const GridSpec& grid() const { return grid_; }
    const MatrixXcd& block(std::size_t a, std::size_t d) const { return blocks_[a * grid_.taus.size() + d]; }
    double energy(int user, std::size_t a, std::size_t d) const {
        return energies_[(static_cast<std::size_t>(user) * grid_.thetas.size() + a) * grid_.taus.size() + d];
    }

private:
    GridSpec grid_;
    std::vector<MatrixXcd> blocks_;
    std::vector<double> energies_;
};

/// Argmax over the grid; ties go to the lowest (user, angle index, delay index).
GridPoint grid_select(const SelectionObjective& objective, const GridDictionary& dict);

// ---------------------------------------------------------------------------
// Refinement and gains

struct RefinementConfig {
    double eta = 1.0;
    int max_halvings = 20;
    int max_iterations = 10;        // t_N
    double relative_tolerance = 1e-8;
    double gain_tolerance = 1e-8;
    int gain_max_iterations = 50;   // t_G; the solver gives up after 10 t_G
};

struct RefineResult {
    double theta = 0.0;
    double tau = 0.0;
    double value = 0.0;
    double start_value = 0.0;
    int iterations = 0;
    std::vector<bool> newton_steps;  // branch taken at each accepted or attempted step
};

/// Newton ascent when the Hessian is negative definite, gradient ascent
/// otherwise. Each raw step is shrunk to at most one grid cell per
/// coordinate, then halved from eta until the objective does not drop.
RefineResult refine(const SelectionObjective& objective, const GridPoint& start, const GridSpec& grid,
                    const RefinementConfig& rcfg);

/// Thrown when the gain solver exhausts its iteration budget.
class GainSolveError : public Error {
public:
    GainSolveError(const std::string& what, VectorXcd last) : Error(what), last_iterate(std::move(last)) {}
    VectorXcd last_iterate;
};

/// argmax_x loglik(x) - ||x||^2 over the complex rows `rows` (their real and
/// imaginary parts), by damped Newton ascent in real form.
VectorXcd map_path_gains(const MatrixXcd& atoms, const QuantizedObservation& obs, const std::vector<Eigen::Index>& rows,
                         const RefinementConfig& rcfg, const VectorXcd& start = VectorXcd());

// ---------------------------------------------------------------------------
// Outer loop

struct EstimateState {
    std::vector<PathParams> paths;  // gains mirror `gains`
    VectorXcd gains;
    std::vector<double> cv_history;
    VectorXcd mean;  // A(P) alpha over all RN rows
    double cv_score = -std::numeric_limits<double>::infinity();
    double log_posterior = -std::numeric_limits<double>::infinity();  // estimation rows

    bool operator==(const EstimateState&) const = default;
};

struct IterationRecord {
    std::vector<PathParams> paths;
    double cv_score = 0.0;
    double log_posterior = 0.0;
    int refine_iterations = 0;
};

struct EstimatorOptions {
    AtomModel model = AtomModel::SpatialWideband;
    bool refine = true;
    bool normalize_atoms = true;
    RefinementConfig rcfg;
    /// Run exactly this many outer iterations (ignoring the CV stop) and keep a trace.
    std::optional<int> forced_iterations;
    /// Safety cap on outer iterations; 0 means min(|E| / 4, 4 * sum L_k).
    int max_paths = 0;
};

struct EstimateResult {
    EstimateState state;  // the best-CV state
    int iterations = 0;   // outer iterations executed
    std::vector<IterationRecord> trace;
};

EstimateResult nfcfgs_cv(const SensingOperator& op, const QuantizedObservation& obs, const GridSpec& grid,
                         EstimatorOptions options = {});

/// nfcfgs_cv without the refinement step.
EstimateResult fcfgs_cv(const SensingOperator& op, const QuantizedObservation& obs, const GridSpec& grid,
                        EstimatorOptions options = {});

/// loglik of the state's mean over the CV rows; -inf for an empty state.
double cv_score(const EstimateState& state, const QuantizedObservation& obs);

/// h = F(P) alpha for the estimated paths.
VectorXcd reconstruct_h(const std::vector<PathParams>& paths, const SystemConfig& cfg,
                        AtomModel model = AtomModel::SpatialWideband);
VectorXcd reconstruct_h(const EstimateState& state, const SystemConfig& cfg,
                        AtomModel model = AtomModel::SpatialWideband);

}  // namespace swce
