// Copyright 2026 The bfssm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bfssm/basis.hpp"
#include "bfssm/model.hpp"
#include "bfssm/rng.hpp"
#include "bfssm/smc.hpp"

namespace bfssm {

/// Reversible-jump style proposal over the free discontinuity points.
/// Relocate: Gaussian random walk (std `sigma_rw`) on one uniformly chosen
/// point, or a +-1 step when the prior uses a location grid. Birth: insert a
/// point drawn from the location prior. Death: remove a uniformly chosen point.
struct XiProposal {
  double relocate = 0.6;
  double birth = 0.2;
  double death = 0.2;
  double sigma_rw = 0.1;
  /// Proposals leaving any segment with fewer transitions are rejected.
  std::size_t min_segment_transitions = 2;

  void validate() const;
};

enum class XiMove { Relocate, Birth, Death, None };

struct XiStep {
  Segmentation segmentation;
  XiMove move = XiMove::None;
  bool accepted = false;
  /// min(1, ratio) of the MH test; 0 for auto-rejected proposals.
  double acceptance_probability = 0.0;
};

/// One Metropolis-within-Gibbs update of the segmentation given the states,
/// with (A, Q) integrated out through log_marglik.
/// With `fixed_q` set, only A is integrated out.
XiStep sample_xi_mh(const TransitionData& transitions, const Segmentation& current,
                    const SegPrior& prior, const XiProposal& proposal, RngStream& rng,
                    const MatrixXd* fixed_q = nullptr);

XiStep sample_xi_mh(const MatrixXd& x, const MatrixXd& u, const Segmentation& current,
                    const SegPrior& prior, const XiProposal& proposal, const Basis& basis,
                    const SsmConfig& config, RngStream& rng);

/// log p(x | xi) + log p(xi), the unnormalized target of the segmentation step.
double log_xi_target(const TransitionData& transitions, const Segmentation& seg,
                     const SegPrior& prior, const MatrixXd* fixed_q = nullptr);

// --- Particle Gibbs ---------------------------------------------------------

enum class Block { Trajectory, Segmentation, NoiseCovariance, Coefficients };

/// One conditional draw of the sweep. `given` lists the blocks it conditions
/// on (at their most recent values); `previous_self` marks an MH update that
/// also reads its own previous value.
struct SweepStep {
  Block target;
  std::vector<Block> given;
  bool previous_self = false;
};

struct GibbsOptions {
  std::size_t iterations = 1000;
  PgasConfig pgas;
  bool learn_segmentation = false;
  XiProposal proposal;
  /// Known process covariance; when set, Q is not sampled.
  std::optional<MatrixXd> fixed_q;
  bool keep_trajectories = true;
};

struct GibbsState {
  Theta theta;
  Segmentation segmentation;
  MatrixXd x;
};

struct GibbsSample {
  std::size_t k = 0;
  GibbsState state;
  bool xi_accepted = false;
};

struct GibbsChain {
  std::vector<GibbsSample> samples;  // K + 1 entries, samples[0] is the initialization
  std::size_t xi_proposals = 0;
  std::size_t xi_accepts = 0;

  double acceptance_rate() const {
    return xi_proposals == 0 ? 0.0 : static_cast<double>(xi_accepts) / xi_proposals;
  }
};

/// Particle Gibbs sampler holding the current chain state. Copying a sampler
/// forks the chain, including its random stream.
class GibbsSampler {
 public:
  GibbsSampler(const SsmConfig& config, const Basis& basis, const ObservedData& data,
               SegPrior prior, GibbsOptions options, RngStream rng, GibbsState init);

  /// x -> xi -> Q -> A, in the order given by schedule().
  void step();

  static const std::array<SweepStep, 4>& schedule();

  const GibbsState& state() const { return state_; }
  std::size_t iteration() const { return k_; }
  bool last_xi_accepted() const { return last_accepted_; }
  std::size_t xi_proposals() const { return proposals_; }
  std::size_t xi_accepts() const { return accepts_; }
  const RngStream& rng() const { return rng_; }

 private:
  void run(const SweepStep& s);

  const SsmConfig* config_;
  const Basis* basis_;
  const ObservedData* data_;
  SegPrior prior_;
  GibbsOptions options_;
  RngStream rng_;
  GibbsState state_;
  std::vector<SuffStats> stats_;
  std::optional<TransitionData> transitions_;
  std::size_t k_ = 0;
  bool last_accepted_ = false;
  std::size_t proposals_ = 0;
  std::size_t accepts_ = 0;
};

/// A = 0, Q = IW mode (or the fixed Q), pinned points only, x from a bootstrap
/// filter run with `num_particles`.
GibbsState default_gibbs_init(const SsmConfig& config, const Basis& basis,
                              const ObservedData& data, const SegPrior& prior,
                              const std::optional<MatrixXd>& fixed_q, int segmentation_dim,
                              std::size_t num_particles, RngStream& rng);

using GibbsCallback = std::function<void(const GibbsSample&)>;

GibbsChain gibbs(const SsmConfig& config, const Basis& basis, const ObservedData& data,
                 const SegPrior& prior, const GibbsOptions& options, RngStream& rng,
                 std::optional<GibbsState> init = std::nullopt, int segmentation_dim = 0,
                 const GibbsCallback& on_sample = {});

// --- PSAEM --------------------------------------------------------------------

struct PsaemOptions {
  std::size_t iterations = 500;
  PgasConfig pgas;
  double gamma_exponent = 2.0 / 3.0;
  /// Iterations run with gamma = 1 before the decay starts.
  std::size_t burn_in = 0;
  std::optional<MatrixXd> fixed_q;

  double step_size(std::size_t k) const;
};

struct PsaemTraceEntry {
  std::size_t k = 0;
  double gamma = 1.0;
  Theta theta;  // theta[k + 1], the M-step output of iteration k
};

struct PsaemResult {
  Theta theta;
  SuffStats smoothed;
  MatrixXd x;
  std::vector<PsaemTraceEntry> trace;
};

using PsaemCallback = std::function<void(const PsaemTraceEntry&)>;

/// Regularized maximum likelihood by particle stochastic approximation EM.
/// No discontinuity points are allowed (single segment).
PsaemResult psaem(const SsmConfig& config, const Basis& basis, const ObservedData& data,
                  const MniwParams& prior, const PsaemOptions& options, RngStream& rng,
                  std::optional<Theta> init = std::nullopt,
                  std::optional<MatrixXd> init_x = std::nullopt,
                  const PsaemCallback& on_iteration = {});

// --- Initialization ---------------------------------------------------------

struct LinearInit {
  Theta theta;       // A = 0, Q from the linear fit residuals
  LinearMap offset;  // fitted x_{t+1} ~ F x_t + G u_t, usable as known offset
  MatrixXd states;   // n_x x T pseudo-states of the fit; empty on fallback
  bool fallback = false;
  std::string warning;
};

/// Linear model from an ARX fit of order n_x / n_y (conjugate update with a
/// nearly flat prior), realized in coordinates where y = C x + D u holds for
/// the configured C. Falls back to a zero model (with a warning) on short
/// data, a non-linear g, n_x not a multiple of n_y or rank deficiency.
LinearInit init_linear(const ObservedData& data, const SsmConfig& config, const MniwParams& prior);

}  // namespace bfssm
