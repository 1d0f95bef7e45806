//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef UNIMOMO_FULLATOM_VAE_HPP_
#define UNIMOMO_FULLATOM_VAE_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "unimomo/blockgraph.hpp"
#include "unimomo/blockrepr.hpp"
#include "unimomo/eqnet.hpp"
#include "unimomo/params.hpp"
#include "unimomo/random.hpp"
#include "unimomo/tape.hpp"

namespace unimomo {

// Latent representation of one block: an invariant state vector plus an
// equivariant coordinate, each with its posterior parameters.
struct LatentPoint {
  std::vector<double> z;         // sampled state (latent_dim)
  Vec3 zvec = {0.0, 0.0, 0.0};   // sampled coordinate
  std::vector<double> mu;        // state posterior mean
  std::vector<double> sigma;     // state posterior spread, strictly positive
  Vec3 muvec = {0.0, 0.0, 0.0};  // coordinate posterior mean
  double sigmavec = 1.0;         // isotropic coordinate spread, positive
  Vec3 prior_center = {0.0, 0.0, 0.0};  // block heavy-atom centroid
};

// Per-atom state carried through the iterative structure decoder.
struct AtomState {
  std::vector<double> hidden;   // scalar features (hidden_size)
  Vec3 velocity = {0.0, 0.0, 0.0};
  Vec3 coord = {0.0, 0.0, 0.0};
  double t = 1.0;               // flow time in [0, 1]
};

struct VaeConfig {
  EqNetConfig net;                  // backbone settings shared by all subnets
  std::size_t latent_dim = 8;
  std::size_t time_feature_pairs = 8;  // sin/cos pairs embedding the flow time
  void validate() const;            // throws ConfigError
};

struct VaeTrainConfig {
  double lambda1 = 0.6;    // KL weight on latent states (0.4 for the
                           // small-molecule single-domain setup)
  double lambda2 = 0.8;    // KL weight on latent coordinates
  double lambda_dist = 0.5;
  double mask_ratio = 0.05;            // share of site blocks reconstructed
  std::size_t n_iters = 10;            // structure-decoding iterations
  double teacher_force_interbond_p = 0.5;
  double dist_loss_tmax = 0.25;        // distance loss active for t below this
  double dist_neighbor_radius = 6.0;   // Angstrom
  double bond_candidate_radius = 3.5;  // Angstrom
  double lr = 1e-4;
  std::size_t warmup = 2000;           // linear KL warmup steps
  std::size_t epochs = 250;
  double noise_scale = 1.0;            // latent-coordinate training noise
  double clip_norm = 1.0;
  void validate() const;               // throws ConfigError
};

// lambda1 * KL(N(0,I) || N(mu, diag(sigma^2)))
//   + lambda2 * KL(N(prior_center, I) || N(muvec, sigmavec^2 I)),
// both in closed form with the prior as the first argument.
double kl_loss(const LatentPoint& p, double lambda1, double lambda2);

// Linear flow path between the noise endpoint x1 (t=1) and the data endpoint
// x0 (t=0): position x^t = t*x1 + (1-t)*x0 and the constant velocity target
// x0 - x1 that carries x1 to x0 over unit time.
struct FlowPoint {
  Vec3 xt = {0.0, 0.0, 0.0};
  Vec3 velocity = {0.0, 0.0, 0.0};
};
FlowPoint flow_interpolate(const Vec3& x0, const Vec3& x1, double t);

// Adds N(0, noise_scale^2 I) to every zvec; z and all posterior parameters
// are untouched. Training-side robustness to latent-coordinate errors.
std::vector<LatentPoint> perturb_latent_coords(std::vector<LatentPoint> points,
                                               RandomStream& rng,
                                               double noise_scale = 1.0);

// Plain-data reconstruction loss (documented convention):
//   mean over blocks of [ CE(type) + sum of CE over that block's candidate
//   bond pairs + MSE(velocity entries) + lambda_dist * L_dist(block) ],
// where L_dist compares predicted final coords (coord_t + t * velocity)
// against true coords over all atom pairs with true distance below
// dist_neighbor_radius, normalized per block by its total neighbor count and
// active only when t < dist_loss_tmax.
struct ReconTruth {
  std::vector<int> type_ids;          // per block: vocabulary index
  std::vector<std::size_t> block_of;  // per atom: owning block
  std::vector<Vec3> coords0;          // per atom: ground-truth coordinates
  std::vector<Vec3> velocity;         // per atom: ground-truth velocity
  // Candidate bond pairs (flat atom indices, i < j) with their true label:
  // 0 none, 1..3 bond order.
  std::vector<std::array<std::size_t, 2>> bond_pairs;
  std::vector<int> bond_labels;
};
struct ReconPred {
  Tensor type_logits;           // (n_blocks, vocab size), already masked
  Tensor bond_logits;           // (n_pairs, 4), raw logits
  std::vector<Vec3> velocity;   // per atom
  std::vector<Vec3> coords_t;   // per atom: input coordinates at time t
};
double reconstruction_loss(const ReconPred& pred, const ReconTruth& truth,
                           double t, const VaeTrainConfig& cfg);

// Selects which term of the training objective a tape build produces;
// used for per-term gradient checks.
enum class VaeLossTerm {
  total,
  kl_state,
  kl_coord,
  type_ce,
  bond_ce,
  velocity_mse,
  distance,
};

struct VaeLossBreakdown {
  double kl = 0.0;    // warmup-weighted KL term
  double rec = 0.0;   // type CE + bond CE + velocity MSE
  double dist = 0.0;  // lambda_dist-weighted distance term
  double total = 0.0;
};

class VaeModel {
 public:
  // Registers all parameters under "<prefix>." in the store. The vocabulary
  // fixes the type-embedding and type-logit dimensions; it must outlive the
  // model.
  VaeModel(ParamStore& store, const std::string& prefix,
           const blockrepr::Vocabulary& vocab, const VaeConfig& cfg, RandomStream& rng);

  // Encodes one graph (binder and site are encoded in separate calls). Every
  // block must carry a vocabulary block type. Samples z = mu + eps * sigma
  // and zvec = muvec + eps * sigmavec unless deterministic, which returns the
  // means. Throws DataError on empty graphs or unknown block types and
  // NumericError on non-finite network output.
  std::vector<LatentPoint> encode(const BlockGraph& graph, RandomStream& rng,
                                  bool deterministic = false) const;

  // Type logits for the binder latents conditioned on the site latents,
  // masked by prompts (prompt=1 keeps amino-acid entries only). Rows align
  // with `binder`. Throws ConfigError when prompt=1 finds no amino-acid
  // entries in the vocabulary.
  Tensor decode_type_logits(const std::vector<LatentPoint>& binder,
                            const std::vector<LatentPoint>& site,
                            const std::vector<int>& prompts) const;

  // Argmax of decode_type_logits: one vocabulary index per binder latent.
  std::vector<std::size_t> decode_types(const std::vector<LatentPoint>& binder,
                                        const std::vector<LatentPoint>& site,
                                        const std::vector<int>& prompts) const;

  // Vocabulary lookup: builds undetermined-coordinate blocks (atoms and
  // intra-block bonds) from type indices.
  BlockGraph blocks_from_types(const std::vector<std::size_t>& type_ids,
                               const std::vector<int>& prompts) const;

  // One integration step of the structure module at flow time t: runs the
  // backbone over binder atoms (current coords) plus site context, returns
  // refreshed hidden states, velocities, and coords advanced by dt *
  // velocity (atom state t advanced to t - dt). `binder` supplies atom
  // elements, block types, and intra bonds; `known_inter` any known
  // inter-block bonds. Throws NumericError on non-finite velocities.
  std::vector<AtomState> structure_step(
      const BlockGraph& binder, const std::vector<InterBond>& known_inter,
      const std::vector<AtomState>& atoms,
      const std::vector<LatentPoint>& lat_binder,
      const std::vector<LatentPoint>& lat_site, const BlockGraph& site,
      double t, double dt) const;

  struct StructureResult {
    std::vector<Vec3> coords;            // flat binder atoms, block order
    std::vector<InterBond> inter_bonds;  // supplied or predicted
    std::vector<AtomState> atoms;        // final states (hidden, velocity)
  };

  // Full structure decoding: initial coords from N(zvec, I), n_iters Euler
  // steps from t=1 with dt = 1/n_iters, then inter-block bond prediction over
  // cross-block pairs closer than bond_candidate_radius (skipped when
  // known_inter is non-null, which is returned unchanged).
  StructureResult decode_structure(
      const BlockGraph& binder, const std::vector<LatentPoint>& lat_binder,
      const std::vector<LatentPoint>& lat_site, const BlockGraph& site,
      const std::vector<InterBond>* known_inter, RandomStream& rng,
      std::size_t n_iters = 10, double bond_candidate_radius = 3.5) const;

  // Bond-type distribution {none, single, double, triple} for a pair of
  // structure-module hidden vectors; exactly symmetric in its arguments.
  std::vector<double> bond_probs(const std::vector<double>& hp,
                                 const std::vector<double>& hq) const;

  struct SampleResult {
    BlockGraph binder;
    int structure_passes = 0;
    int reencodes = 0;
  };

  // Full sampling pass: decode types, look up blocks, decode structure with
  // bond prediction, re-encode the generated binder, decode structure once
  // more with the predicted bonds held fixed.
  SampleResult sample_vae(const std::vector<LatentPoint>& lat_binder,
                          const std::vector<LatentPoint>& lat_site,
                          const BlockGraph& site,
                          const std::vector<int>& prompts, RandomStream& rng,
                          std::size_t n_iters = 10) const;

  // Pre-drawn randomness for one training step, making the step loss a
  // deterministic function of the parameters (finite-difference friendly).
  struct StepSample {
    std::vector<double> eps_binder, epsvec_binder;  // reparameterization
    std::vector<double> eps_site, epsvec_site;
    std::vector<double> perturb;            // decoder-side zvec noise (3 per
                                            // binder block, pre-scale)
    std::vector<std::size_t> site_recon;    // sampled site blocks
    double t = 0.5;                         // flow time
    bool teacher_inter = false;             // inter-bond teacher forcing coin
    std::vector<double> x1;                 // initial-coordinate noise, 3 per
                                            // reconstructed atom
  };
  StepSample draw_step_sample(const ComplexRecord& rec,
                              const VaeTrainConfig& cfg,
                              RandomStream& rng) const;

  // Builds one training-step loss (Alg. described in train_vae) on the tape.
  // kl_weight scales the KL term (warmup). `term` selects a single component
  // for gradient checks; `out` receives the numeric breakdown when non-null.
  Value build_step_loss(Tape& tape, const ComplexRecord& rec,
                        const StepSample& sample, const VaeTrainConfig& cfg,
                        double kl_weight, VaeLossTerm term = VaeLossTerm::total,
                        VaeLossBreakdown* out = nullptr) const;

  const blockrepr::Vocabulary& vocabulary() const { return *vocab_; }
  const VaeConfig& config() const { return cfg_; }

 private:
  struct EncodeOut {
    Value mu;        // (B, d)
    Value sigma;     // (B, d)
    Value muvec;     // (3B, 1)
    Value sigmavec;  // (B, 1)
    std::vector<Vec3> prior_centers;
  };
  EncodeOut encode_on_tape(Tape& tape, const BlockGraph& graph) const;

  struct LatentNodes {
    std::vector<double> z;     // flattened states, row-major (n, d)
    std::vector<Vec3> coords;  // zvec per node
    std::vector<int> context;  // 0 binder, 1 site
  };
  // Type logits on the tape for the selected rows of the latent graph;
  // prompts align with `rows`.
  Value type_logits_on_tape(Tape& tape, Value z_states,
                            const LatentNodes& nodes,
                            const std::vector<std::size_t>& rows,
                            const std::vector<int>& prompts) const;

  struct StructForward {
    Value hidden;    // (n_recon_atoms, F)
    Value velocity;  // (3*n_recon_atoms, 1)
  };
  // Shared structure-module forward: recon atoms at `coords` plus fixed
  // context atoms, conditioned on latent states and flow time. `cross_bonds`
  // holds extra bonds in flat node indices (recon atoms first, context atoms
  // offset by the recon atom count).
  StructForward struct_forward(Tape& tape, const BlockGraph& recon,
                               const std::vector<InterBond>& recon_inter,
                               const std::vector<BondSpec>& cross_bonds,
                               const std::vector<Vec3>& recon_coords,
                               Value recon_z,  // (n_recon_blocks, d)
                               const BlockGraph& context,
                               Value context_z,  // (n_context_blocks, d)
                               double t) const;

  Value bond_logits_on_tape(Tape& tape, Value hidden_sum) const;

  void check_finite(const Tensor& t, const std::string& what) const;

  const blockrepr::Vocabulary* vocab_;
  VaeConfig cfg_;
  std::size_t n_aa_entries_ = 0;

  EqNet enc_net_, type_net_, struct_net_;
  // Encoder embeddings and heads.
  Param* enc_elem_emb_;
  Param* enc_btype_emb_;
  Param* enc_mu_w_;
  Param* enc_mu_b_;
  Param* enc_sigma_w_;
  Param* enc_sigma_b_;
  Param* enc_vecread_;
  Param* enc_sigmavec_w_;
  Param* enc_sigmavec_b_;
  // Type decoder.
  Param* type_z_w_;
  Param* type_z_b_;
  Param* type_ctx_emb_;
  Param* type_head_w_;
  Param* type_head_b_;
  // Structure decoder.
  Param* str_elem_emb_;
  Param* str_btype_emb_;
  Param* str_ctx_emb_;
  Param* str_z_w_;
  Param* str_z_b_;
  Param* str_time_w_;
  Param* str_time_b_;
  Param* str_vecread_;
  Param* bond_w1_;
  Param* bond_b1_;
  Param* bond_w2_;
  Param* bond_b2_;
  Param* bond_w3_;
  Param* bond_b3_;
};

struct VaeTrainStats {
  std::size_t steps = 0;
  // One row per step: {step, kl, rec, dist, total}.
  std::vector<std::array<double, 5>> curve;
  double final_total = 0.0;
};

// Trains the model: per step, encode binder and site separately, sample the
// site-reconstruction subset, interpolate coordinates at a random flow time,
// teacher-force atoms and intra bonds (inter bonds with probability 0.5),
// and minimize the per-block mean of KL + reconstruction + weighted distance
// loss with linear KL warmup, Adam, and global-norm clipping. Records with no
// binder are skipped; an effectively empty dataset is a DataError. max_steps
// of 0 runs cfg.epochs passes over the dataset. When csv_path is non-empty,
// writes "step,loss_kl,loss_rec,loss_dist,total" rows there.
VaeTrainStats train_vae(VaeModel& model, ParamStore& store,
                        const std::vector<ComplexRecord>& dataset,
                        const VaeTrainConfig& cfg, RandomStream& rng,
                        std::size_t max_steps = 0,
                        const std::string& csv_path = "");

// Sinusoidal embedding of a scalar in [0, 1]: pairs (sin, cos) at dyadic
// frequencies; row vector of length 2 * pairs.
Tensor time_features(double t, std::size_t pairs);

}  // namespace unimomo

#endif  // UNIMOMO_FULLATOM_VAE_HPP_
