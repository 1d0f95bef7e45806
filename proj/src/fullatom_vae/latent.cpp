//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cmath>
#include <vector>

#include "unimomo/errors.hpp"
#include "unimomo/fullatom_vae.hpp"

namespace unimomo {

void VaeConfig::validate() const {
  net.validate();
  if (latent_dim == 0) throw ConfigError("vae: latent_dim must be positive");
  if (time_feature_pairs == 0)
    throw ConfigError("vae: time_feature_pairs must be positive");
}

void VaeTrainConfig::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0 || lambda_dist < 0.0)
    throw ConfigError("vae train: loss weights must be non-negative");
  if (mask_ratio < 0.0 || mask_ratio > 1.0)
    throw ConfigError("vae train: mask_ratio must lie in [0, 1]");
  if (n_iters == 0) throw ConfigError("vae train: n_iters must be positive");
  if (teacher_force_interbond_p < 0.0 || teacher_force_interbond_p > 1.0)
    throw ConfigError("vae train: teacher_force_interbond_p must lie in [0, 1]");
  if (dist_loss_tmax < 0.0 || dist_loss_tmax > 1.0)
    throw ConfigError("vae train: dist_loss_tmax must lie in [0, 1]");
  if (dist_neighbor_radius <= 0.0 || bond_candidate_radius <= 0.0)
    throw ConfigError("vae train: radii must be positive");
  if (lr <= 0.0) throw ConfigError("vae train: lr must be positive");
  if (epochs == 0) throw ConfigError("vae train: epochs must be positive");
  if (noise_scale < 0.0)
    throw ConfigError("vae train: noise_scale must be non-negative");
  if (clip_norm <= 0.0)
    throw ConfigError("vae train: clip_norm must be positive");
}

double kl_loss(const LatentPoint& p, double lambda1, double lambda2) {
  if (p.mu.size() != p.sigma.size())
    throw DataError("kl_loss: mu/sigma size mismatch");
  double state = 0.0;
  for (std::size_t k = 0; k < p.mu.size(); ++k) {
    const double s = p.sigma[k];
    if (!(s > 0.0)) throw DataError("kl_loss: sigma must be positive");
    state += std::log(s) + (1.0 + p.mu[k] * p.mu[k]) / (2.0 * s * s) - 0.5;
  }
  const double sv = p.sigmavec;
  if (!(sv > 0.0)) throw DataError("kl_loss: sigmavec must be positive");
  double sq = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double d = p.prior_center[k] - p.muvec[k];
    sq += d * d;
  }
  const double coord = 3.0 * std::log(sv) + (3.0 + sq) / (2.0 * sv * sv) - 1.5;
  return lambda1 * state + lambda2 * coord;
}

FlowPoint flow_interpolate(const Vec3& x0, const Vec3& x1, double t) {
  FlowPoint f;
  for (std::size_t k = 0; k < 3; ++k) {
    // Endpoints return the inputs bit-exactly.
    f.xt[k] = t == 0.0 ? x0[k]
                       : (t == 1.0 ? x1[k] : t * x1[k] + (1.0 - t) * x0[k]);
    f.velocity[k] = x0[k] - x1[k];
  }
  return f;
}

std::vector<LatentPoint> perturb_latent_coords(std::vector<LatentPoint> points,
                                               RandomStream& rng,
                                               double noise_scale) {
  if (noise_scale < 0.0)
    throw ConfigError("perturb_latent_coords: noise_scale must be >= 0");
  if (noise_scale == 0.0) return points;
  for (LatentPoint& p : points)
    for (std::size_t k = 0; k < 3; ++k)
      p.zvec[k] += noise_scale * rng.normal();
  return points;
}

Tensor time_features(double t, std::size_t pairs) {
  Tensor out(1, 2 * pairs);
  double omega = 3.14159265358979323846;
  for (std::size_t j = 0; j < pairs; ++j, omega *= 2.0) {
    out(0, 2 * j) = std::sin(omega * t);
    out(0, 2 * j + 1) = std::cos(omega * t);
  }
  return out;
}

namespace {

// Stable cross entropy -log softmax(row)[label].
double row_cross_entropy(const Tensor& logits, std::size_t row, int label) {
  const std::size_t n = logits.cols();
  if (label < 0 || static_cast<std::size_t>(label) >= n)
    throw DataError("reconstruction_loss: label out of range");
  double mx = logits(row, 0);
  for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, logits(row, j));
  double lse = 0.0;
  for (std::size_t j = 0; j < n; ++j) lse += std::exp(logits(row, j) - mx);
  return mx + std::log(lse) - logits(row, static_cast<std::size_t>(label));
}

}  // namespace

double reconstruction_loss(const ReconPred& pred, const ReconTruth& truth,
                           double t, const VaeTrainConfig& cfg) {
  const std::size_t n_blocks = truth.type_ids.size();
  const std::size_t n_atoms = truth.block_of.size();
  if (n_blocks == 0) throw DataError("reconstruction_loss: no blocks");
  if (pred.type_logits.rows() != n_blocks)
    throw DataError("reconstruction_loss: type logit row mismatch");
  if (truth.coords0.size() != n_atoms || truth.velocity.size() != n_atoms ||
      pred.velocity.size() != n_atoms || pred.coords_t.size() != n_atoms)
    throw DataError("reconstruction_loss: atom array size mismatch");
  if (truth.bond_pairs.size() != truth.bond_labels.size() ||
      pred.bond_logits.rows() != truth.bond_pairs.size())
    throw DataError("reconstruction_loss: bond array size mismatch");

  std::vector<double> type_ce(n_blocks, 0.0), bond_ce(n_blocks, 0.0);
  std::vector<double> vel_sq(n_blocks, 0.0);
  std::vector<std::size_t> atoms_in(n_blocks, 0);

  for (std::size_t i = 0; i < n_blocks; ++i)
    type_ce[i] = row_cross_entropy(pred.type_logits, i, truth.type_ids[i]);

  for (std::size_t p = 0; p < truth.bond_pairs.size(); ++p) {
    const auto [a, b] = truth.bond_pairs[p];
    if (a >= n_atoms || b >= n_atoms || a >= b)
      throw DataError("reconstruction_loss: bad bond pair");
    const double ce = row_cross_entropy(pred.bond_logits, p,
                                        truth.bond_labels[p]);
    bond_ce[truth.block_of[a]] += ce;
    if (truth.block_of[b] != truth.block_of[a])
      bond_ce[truth.block_of[b]] += ce;
  }

  for (std::size_t a = 0; a < n_atoms; ++a) {
    const std::size_t i = truth.block_of[a];
    if (i >= n_blocks) throw DataError("reconstruction_loss: bad block id");
    ++atoms_in[i];
    for (std::size_t k = 0; k < 3; ++k) {
      const double d = pred.velocity[a][k] - truth.velocity[a][k];
      vel_sq[i] += d * d;
    }
  }

  std::vector<double> dist_term(n_blocks, 0.0);
  if (t < cfg.dist_loss_tmax) {
    std::vector<Vec3> xhat(n_atoms);
    for (std::size_t a = 0; a < n_atoms; ++a)
      for (std::size_t k = 0; k < 3; ++k)
        xhat[a][k] = pred.coords_t[a][k] + t * pred.velocity[a][k];
    std::vector<double> num(n_blocks, 0.0);
    std::vector<std::size_t> den(n_blocks, 0);
    for (std::size_t p = 0; p < n_atoms; ++p)
      for (std::size_t q = 0; q < n_atoms; ++q) {
        if (p == q) continue;
        const double d0 = distance(truth.coords0[p], truth.coords0[q]);
        if (d0 >= cfg.dist_neighbor_radius) continue;
        num[truth.block_of[p]] += std::fabs(distance(xhat[p], xhat[q]) - d0);
        ++den[truth.block_of[p]];
      }
    for (std::size_t i = 0; i < n_blocks; ++i)
      if (den[i] > 0) dist_term[i] = num[i] / static_cast<double>(den[i]);
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n_blocks; ++i) {
    const double mse =
        atoms_in[i] ? vel_sq[i] / (3.0 * static_cast<double>(atoms_in[i]))
                    : 0.0;
    total += type_ce[i] + bond_ce[i] + mse + cfg.lambda_dist * dist_term[i];
  }
  return total / static_cast<double>(n_blocks);
}

}  // namespace unimomo
