//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef UNIMOMO_LATENT_DDPM_HPP_
#define UNIMOMO_LATENT_DDPM_HPP_

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "unimomo/blockgraph.hpp"
#include "unimomo/eqnet.hpp"
#include "unimomo/fullatom_vae.hpp"
#include "unimomo/params.hpp"
#include "unimomo/random.hpp"
#include "unimomo/tape.hpp"
#include "unimomo/tensor.hpp"

namespace unimomo {

// Variance schedule for the denoising diffusion chain. Step accessors are
// 1-based in t (1..T); alpha_bar(0) == 1 by construction, and alpha_bars is
// stored as the running product of the (possibly clipped) alphas so the
// product identity holds exactly.
struct NoiseSchedule {
  std::size_t T = 0;
  std::vector<double> betas;       // betas[t-1] is the noise scale at step t
  std::vector<double> alphas;      // alphas[t-1] = 1 - betas[t-1]
  std::vector<double> alpha_bars;  // alpha_bars[t] = prod of alphas up to t

  double beta(std::size_t t) const;       // t in 1..T
  double alpha(std::size_t t) const;      // t in 1..T
  double alpha_bar(std::size_t t) const;  // t in 0..T

  // Throws ConfigError when T == 0, vector sizes disagree, any beta lies
  // outside (0,1), alphas mismatch betas, alpha_bar(0) != 1, the running
  // product deviates by more than 1e-10, or alpha_bar is not strictly
  // decreasing.
  void validate() const;
};

// Cosine schedule: alpha_bar(t) = f(t)/f(0) with
// f(t) = cos^2(((t/T + s)/(1+s)) * pi/2); beta(t) = 1 - f(t)/f(t-1) clipped
// to at most 0.999. Throws ConfigError when T == 0.
NoiseSchedule cosine_schedule(std::size_t T = 100, double s = 0.008);

// One latent point cloud: row i of `u` is [z_i (latent_dim) | zvec_i (3)].
// mask[i] == 1 marks generated points that diffusion noises and updates;
// mask[i] == 0 marks context points that every operation leaves untouched.
struct LatentState {
  Tensor u;                // (n_points, latent_dim + 3)
  std::vector<int> mask;   // 1 = generated, 0 = context
  std::vector<int> prompt; // per-point prompt id, 0 or 1

  std::size_t size() const { return mask.size(); }
  std::size_t generated_count() const;
  std::vector<std::size_t> generated_rows() const;

  // Throws DataError when u has fewer than 4 columns, mask/prompt sizes
  // disagree with u, or any mask/prompt entry is outside {0,1}.
  void validate() const;
};

// Frame for mapping latents into the normalized diffusion space: coordinates
// become (zvec - center) / scale while state channels pass through.
struct LatentNormalizer {
  Vec3 center = {0.0, 0.0, 0.0};
  double scale = 10.0;
};

struct NormalizedLatents {
  LatentState state;
  LatentNormalizer norm;
};

// Stacks binder points (generated) followed by site points (context), with
// coordinates shifted by the site latent centre of mass and divided by the
// fixed scale 10.0; state channels are copied bit-exactly. Prompts default to
// all zeros when omitted. Throws DataError when the site is empty, latent
// widths disagree, or prompt vectors have wrong sizes or entries.
NormalizedLatents normalize(const std::vector<LatentPoint>& binder,
                            const std::vector<LatentPoint>& site,
                            const std::vector<int>& binder_prompts = {},
                            const std::vector<int>& site_prompts = {});

// Inverse map for every row of the state: z is copied, zvec = center +
// scale * coordinate channels. Posterior fields are filled conventionally
// (mu = z, sigma = 1, muvec = zvec, sigmavec = 1, prior_center = zvec) so the
// points feed directly into the structure decoder.
std::vector<LatentPoint> denormalize(const LatentState& state,
                                     const LatentNormalizer& norm);

// Closed-form forward noising of the generated rows:
//   ut = sqrt(alpha_bar(t)) * u0 + sqrt(1 - alpha_bar(t)) * eps.
// Context rows of `ut` are copied from u0 and their `eps` rows stay zero.
// When `eps_in` is null the noise is drawn from `rng` for generated rows in
// row-major order; otherwise `eps_in` must be (n_points, cols) and its
// context rows are ignored. Throws ConfigError for t outside 1..T and
// DataError on shape mismatches.
struct ForwardSample {
  Tensor ut;
  Tensor eps;
};
ForwardSample forward_sample(const LatentState& u0, std::size_t t,
                             const NoiseSchedule& sched, RandomStream& rng,
                             const Tensor* eps_in = nullptr);

// Noise predictor: returns one row of predicted noise (latent_dim + 3
// columns) per generated point of `state`, in state order.
using DenoiserFn =
    std::function<Tensor(const LatentState& state, std::size_t t)>;

// One reverse-diffusion update of the generated rows:
//   uetm1 = (ut - beta/sqrt(1-alpha_bar) * eps_hat) / sqrt(alpha)
//           + sqrt(beta) * xi,
// with xi ~ N(0,I) for t > 1 and xi = 0 at the final step t == 1. Context
// rows are returned bit-identical. When `xi_in` is non-null it supplies xi
// for the generated rows as a (n_generated, cols) tensor (ignored at t == 1);
// otherwise xi is drawn from `rng` in row-major order over generated rows.
// Throws ConfigError for t outside 1..T, DataError when the denoiser output
// has the wrong shape, and NumericError when it is non-finite.
LatentState denoise_step(const LatentState& state, std::size_t t,
                         const DenoiserFn& denoiser, const NoiseSchedule& sched,
                         RandomStream& rng, const Tensor* xi_in = nullptr);

// Denoiser hyperparameters. The backbone runs in normalized latent space, so
// the neighbor cutoff defaults to 3.0 normalized units instead of Angstroms.
struct LdmConfig {
  EqNetConfig net;
  std::size_t latent_dim = 8;
  std::size_t time_feature_pairs = 8;

  LdmConfig() { net.cutoff = 3.0; }

  // Throws ConfigError on invalid backbone settings or zero sizes.
  void validate() const;
};

// Equivariant noise predictor over latent point clouds. Node scalars embed
// the state channels, a generated/context flag, the prompt id, and sinusoidal
// features of t/T; coordinates feed the backbone only through relative
// positions, so predicted state noise is invariant and predicted coordinate
// noise equivariant under rigid motions of the input.
class LatentDenoiser {
 public:
  // Registers all parameters under "<prefix>." in the store. The two output
  // heads start at zero so an untrained model predicts zero noise.
  LatentDenoiser(ParamStore& store, const std::string& prefix,
                 const LdmConfig& cfg, RandomStream& rng);

  struct EpsOut {
    Value state;  // (n_generated, latent_dim)
    Value coord;  // (3 * n_generated, 1), x/y/z rows per generated point
  };

  // Differentiable prediction on an existing tape. Throws DataError when the
  // state is invalid, has no generated points, or its latent width disagrees
  // with the config, and ConfigError for t outside 1..T.
  EpsOut predict_on_tape(Tape& tape, const LatentState& state, std::size_t t,
                         const NoiseSchedule& sched) const;

  // Plain-data wrapper: rows are [state noise | coordinate noise] per
  // generated point, shaped (n_generated, latent_dim + 3).
  Tensor predict(const LatentState& state, std::size_t t,
                 const NoiseSchedule& sched) const;

  // Binds this model and a copy of the schedule as a DenoiserFn. The model
  // must outlive the returned function.
  DenoiserFn fn(const NoiseSchedule& sched) const;

  const LdmConfig& config() const { return cfg_; }

 private:
  LdmConfig cfg_;
  EqNet net_;
  Param* in_w_;
  Param* in_b_;
  Param* ctx_emb_;     // (2, hidden): row 0 generated, row 1 context
  Param* prompt_emb_;  // (2, hidden)
  Param* time_w_;
  Param* time_b_;
  Param* out_w_;
  Param* out_b_;
  Param* vecread_;
};

struct LdmTrainConfig {
  double lr = 1e-4;
  double clip_norm = 1.0;
  std::size_t epochs = 250;

  // Throws ConfigError on non-positive values.
  void validate() const;
};

struct LdmTrainStats {
  std::size_t steps = 0;
  std::vector<std::array<double, 2>> curve;  // {step, loss}
  double final_loss = 0.0;
};

// Trains the denoiser against latents produced by the frozen VAE. Each step
// draws a record (epoch-shuffled), encodes binder and site with the VAE's
// deterministic posterior means, normalizes, draws t uniform on {1..T},
// forward-samples, and minimizes the mean over generated points of
// ||eps - eps_theta||^2 with Adam (learning rate cfg.lr, gradient clipping at
// cfg.clip_norm). `store` must hold only denoiser parameters; the VAE's own
// store is never touched. Runs cfg.epochs passes over the usable records, or
// exactly max_steps steps when max_steps > 0. When csv_path is non-empty the
// curve is written as CSV with header "step,loss". Throws DataError when no
// record has a binder and NumericError on a non-finite loss.
LdmTrainStats train_ldm(LatentDenoiser& denoiser, ParamStore& store,
                        const VaeModel& vae,
                        const std::vector<ComplexRecord>& dataset,
                        const NoiseSchedule& sched, const LdmTrainConfig& cfg,
                        RandomStream& rng, std::size_t max_steps = 0,
                        const std::string& csv_path = "");

// Optional pre-drawn randomness for paired sampling runs: `init` seeds the
// generated rows ((n_blocks, cols)) and xi[t-1] supplies the step-t reverse
// noise ((n_blocks, cols); the t == 1 entry is unused).
struct SampleNoise {
  Tensor init;
  std::vector<Tensor> xi;
};

// Samples n_blocks latent points conditioned on the site: initializes the
// generated rows from N(0, I) in normalized space, runs denoise_step for
// t = T..1, denormalizes, and returns the generated points (ready for the
// full-atom decoder). `prompts` must have one entry in {0,1} per sampled
// block; site prompts are 0. Throws ConfigError when n_blocks == 0 and
// DataError when the site is empty or `prompts`/`noise` have wrong shapes.
std::vector<LatentPoint> sample_ldm(const std::vector<LatentPoint>& site,
                                    std::size_t n_blocks,
                                    const std::vector<int>& prompts,
                                    const DenoiserFn& denoiser,
                                    const NoiseSchedule& sched,
                                    RandomStream& rng,
                                    const SampleNoise* noise = nullptr);

// Heuristic block count for sampling when the caller gives none: the block
// count of a reference ligand for the same pocket. Throws DataError when the
// reference is empty.
std::size_t suggest_block_count(const BlockGraph& reference_ligand);

}  // namespace unimomo

#endif  // UNIMOMO_LATENT_DDPM_HPP_
