//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "unimomo/errors.hpp"
#include "unimomo/fullatom_vae.hpp"
#include "unimomo/optim.hpp"

namespace unimomo {

VaeModel::StepSample VaeModel::draw_step_sample(const ComplexRecord& rec,
                                                const VaeTrainConfig& cfg,
                                                RandomStream& rng) const {
  if (!rec.binder || rec.binder->empty())
    throw DataError("vae train: record '" + rec.id + "' has no binder");
  const std::size_t d = cfg_.latent_dim;
  const std::size_t bx = rec.binder->blocks.size();
  const std::size_t by = rec.target.blocks.size();

  StepSample s;
  s.eps_binder = rng.normal_vector(bx * d);
  s.epsvec_binder = rng.normal_vector(3 * bx);
  s.eps_site = rng.normal_vector(by * d);
  s.epsvec_site = rng.normal_vector(3 * by);
  s.perturb = rng.normal_vector(3 * bx);

  const std::size_t n_sel = static_cast<std::size_t>(
      std::llround(cfg.mask_ratio * static_cast<double>(by)));
  std::vector<std::size_t> perm = rng.permutation(by);
  s.site_recon.assign(perm.begin(), perm.begin() + n_sel);
  std::sort(s.site_recon.begin(), s.site_recon.end());

  s.t = 1.0 - rng.uniform();  // (0, 1]
  s.teacher_inter = rng.uniform() < cfg.teacher_force_interbond_p;

  std::size_t n_recon_atoms = rec.binder->atom_count();
  for (std::size_t j : s.site_recon)
    n_recon_atoms += rec.target.blocks[j].atoms.size();
  s.x1 = rng.normal_vector(3 * n_recon_atoms);
  return s;
}

namespace {

// Sum over the last dimension of the per-entry closed-form divergence from a
// unit-spread reference centered at zero to N(mu, diag sigma^2).
Value state_kl_rows(Tape& tape, Value mu, Value sigma) {
  Value logs = tape.log(sigma);
  Value quad = tape.mul(tape.add_scalar(tape.square(mu), 1.0),
                        tape.scale(tape.reciprocal(tape.square(sigma)), 0.5));
  return tape.row_sum(tape.add_scalar(tape.add(logs, quad), -0.5));
}

// Same divergence for the isotropic coordinate posterior against a
// unit-spread reference centered on the block centroid.
Value coord_kl_rows(Tape& tape, Value muvec, Value sigmavec,
                    const std::vector<Vec3>& centers) {
  const std::size_t n = centers.size();
  Tensor c(3 * n, 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < 3; ++k) c(3 * i + k, 0) = centers[i][k];
  Value per_block = tape.segment_sum(
      tape.square(tape.sub(muvec, tape.constant(std::move(c)))),
      replicate3(n), n);
  Value logs = tape.scale(tape.log(sigmavec), 3.0);
  Value quad =
      tape.mul(tape.add_scalar(per_block, 3.0),
               tape.scale(tape.reciprocal(tape.square(sigmavec)), 0.5));
  return tape.add_scalar(tape.add(logs, quad), -1.5);
}

}  // namespace

Value VaeModel::build_step_loss(Tape& tape, const ComplexRecord& rec,
                                const StepSample& sample,
                                const VaeTrainConfig& cfg, double kl_weight,
                                VaeLossTerm term,
                                VaeLossBreakdown* out) const {
  if (!rec.binder || rec.binder->empty())
    throw DataError("vae train: record '" + rec.id + "' has no binder");
  const BlockGraph& gx = *rec.binder;
  const BlockGraph& gy = rec.target;
  const std::size_t d = cfg_.latent_dim;
  const std::size_t bx = gx.blocks.size();
  const std::size_t by = gy.blocks.size();
  const bool has_site = by > 0;
  const std::vector<std::size_t>& sel = sample.site_recon;
  const std::size_t n_blocks = bx + sel.size();

  if (sample.eps_binder.size() != bx * d ||
      sample.epsvec_binder.size() != 3 * bx ||
      sample.eps_site.size() != by * d ||
      sample.epsvec_site.size() != 3 * by ||
      sample.perturb.size() != 3 * bx)
    throw DataError("vae train: step sample does not match the record");
  for (std::size_t j : sel)
    if (j >= by) throw DataError("vae train: sampled site block out of range");
  if (!(sample.t > 0.0 && sample.t <= 1.0))
    throw DataError("vae train: flow time must lie in (0, 1]");

  // --- encode both sides and sample latents -------------------------------
  const EncodeOut ex = encode_on_tape(tape, gx);
  EncodeOut ey;
  if (has_site) ey = encode_on_tape(tape, gy);

  Value zx = tape.add(
      ex.mu, tape.mul(tape.constant(Tensor(bx, d, sample.eps_binder)),
                      ex.sigma));
  Value zy;
  if (has_site)
    zy = tape.add(ey.mu,
                  tape.mul(tape.constant(Tensor(by, d, sample.eps_site)),
                           ey.sigma));

  // Latent coordinates are sampled as plain data: the decoders consume them
  // as positions, so gradients reach the coordinate posterior only through
  // its divergence term, which pins it near the block centroid.
  const Tensor& muvx = tape.val(ex.muvec);
  const Tensor& svx = tape.val(ex.sigmavec);
  std::vector<Vec3> zvec_x(bx);
  for (std::size_t i = 0; i < bx; ++i)
    for (std::size_t k = 0; k < 3; ++k)
      zvec_x[i][k] = muvx(3 * i + k, 0) +
                     sample.epsvec_binder[3 * i + k] * svx(i, 0) +
                     cfg.noise_scale * sample.perturb[3 * i + k];
  std::vector<Vec3> zvec_y(by);
  if (has_site) {
    const Tensor& muvy = tape.val(ey.muvec);
    const Tensor& svy = tape.val(ey.sigmavec);
    for (std::size_t j = 0; j < by; ++j)
      for (std::size_t k = 0; k < 3; ++k)
        zvec_y[j][k] =
            muvy(3 * j + k, 0) + sample.epsvec_site[3 * j + k] * svy(j, 0);
  }

  // --- divergence rows over the reconstructed blocks ----------------------
  Value kl_state = state_kl_rows(tape, ex.mu, ex.sigma);
  Value kl_coord = coord_kl_rows(tape, ex.muvec, ex.sigmavec,
                                 ex.prior_centers);
  if (!sel.empty()) {
    kl_state = tape.concat_rows(
        {kl_state,
         tape.gather_rows(state_kl_rows(tape, ey.mu, ey.sigma), sel)});
    kl_coord = tape.concat_rows(
        {kl_coord,
         tape.gather_rows(coord_kl_rows(tape, ey.muvec, ey.sigmavec,
                                        ey.prior_centers),
                          sel)});
  }

  // --- type reconstruction -------------------------------------------------
  LatentNodes nodes;
  nodes.coords = zvec_x;
  nodes.coords.insert(nodes.coords.end(), zvec_y.begin(), zvec_y.end());
  nodes.context.assign(bx, 0);
  nodes.context.insert(nodes.context.end(), by, 1);
  Value z_all = has_site ? tape.concat_rows({zx, zy}) : zx;

  std::vector<std::size_t> rows;
  std::vector<int> prompts;
  std::vector<int> type_labels;
  auto add_block = [&](const Block& blk, std::size_t node_row) {
    rows.push_back(node_row);
    prompts.push_back(blk.prompt);
    const auto idx = vocab_->index_of(blk.block_type);
    if (!idx)
      throw DataError("vae train: block type '" + blk.block_type +
                      "' is not in the vocabulary");
    type_labels.push_back(static_cast<int>(*idx));
  };
  for (std::size_t i = 0; i < bx; ++i) add_block(gx.blocks[i], i);
  for (std::size_t j : sel) add_block(gy.blocks[j], bx + j);

  Value type_rows = tape.cross_entropy_rows(
      type_logits_on_tape(tape, z_all, nodes, rows, prompts), type_labels);

  // --- reconstructed and context graphs -----------------------------------
  BlockGraph recon;
  recon.blocks = gx.blocks;
  std::vector<std::size_t> sel_rank(by, static_cast<std::size_t>(-1));
  for (std::size_t r = 0; r < sel.size(); ++r) {
    sel_rank[sel[r]] = bx + r;
    recon.blocks.push_back(gy.blocks[sel[r]]);
  }
  BlockGraph context;
  std::vector<std::size_t> ctx_rank(by, static_cast<std::size_t>(-1));
  std::vector<std::size_t> unsel;
  for (std::size_t j = 0; j < by; ++j)
    if (sel_rank[j] == static_cast<std::size_t>(-1)) {
      ctx_rank[j] = context.blocks.size();
      context.blocks.push_back(gy.blocks[j]);
      unsel.push_back(j);
    }

  std::vector<std::size_t> recon_off(n_blocks), ctx_off(context.blocks.size());
  std::size_t a_recon = 0, a_ctx = 0;
  for (std::size_t r = 0; r < n_blocks; ++r) {
    recon_off[r] = a_recon;
    a_recon += recon.blocks[r].atoms.size();
  }
  for (std::size_t c = 0; c < context.blocks.size(); ++c) {
    ctx_off[c] = a_ctx;
    a_ctx += context.blocks[c].atoms.size();
  }
  if (sample.x1.size() != 3 * a_recon)
    throw DataError("vae train: step sample does not match the record");

  // Ground-truth inter-block bonds among reconstructed blocks (labels and,
  // when the teacher-forcing coin says so, network input) plus bonds crossing
  // into the fixed context.
  std::vector<InterBond> recon_inter_truth = gx.inter_bonds;
  std::vector<BondSpec> cross_truth;
  for (const InterBond& ib : gy.inter_bonds) {
    const bool si = sel_rank[ib.i] != static_cast<std::size_t>(-1);
    const bool sj = sel_rank[ib.j] != static_cast<std::size_t>(-1);
    if (si && sj) {
      recon_inter_truth.push_back(
          {sel_rank[ib.i], ib.p, sel_rank[ib.j], ib.q, ib.order});
    } else if (si || sj) {
      const std::size_t flat_r = si ? recon_off[sel_rank[ib.i]] + ib.p
                                    : recon_off[sel_rank[ib.j]] + ib.q;
      const std::size_t flat_c = si ? a_recon + ctx_off[ctx_rank[ib.j]] + ib.q
                                    : a_recon + ctx_off[ctx_rank[ib.i]] + ib.p;
      cross_truth.push_back({flat_r, flat_c, ib.order});
    } else {
      context.inter_bonds.push_back(
          {ctx_rank[ib.i], ib.p, ctx_rank[ib.j], ib.q, ib.order});
    }
  }
  static const std::vector<InterBond> kNoInter;
  static const std::vector<BondSpec> kNoCross;
  const std::vector<InterBond>& forced_inter =
      sample.teacher_inter ? recon_inter_truth : kNoInter;
  const std::vector<BondSpec>& forced_cross =
      sample.teacher_inter ? cross_truth : kNoCross;

  // --- coordinate interpolation --------------------------------------------
  std::vector<std::size_t> block_of(a_recon);
  std::vector<Vec3> x0(a_recon);
  {
    std::size_t a = 0;
    for (std::size_t r = 0; r < n_blocks; ++r)
      for (const Atom& atom : recon.blocks[r].atoms) {
        block_of[a] = r;
        x0[a] = atom.coord;
        ++a;
      }
  }
  std::vector<Vec3> x1(a_recon), xt(a_recon), vtrue(a_recon);
  for (std::size_t a = 0; a < a_recon; ++a) {
    const std::size_t r = block_of[a];
    const Vec3& center = r < bx ? zvec_x[r] : zvec_y[sel[r - bx]];
    for (std::size_t k = 0; k < 3; ++k)
      x1[a][k] = center[k] + sample.x1[3 * a + k];
    const FlowPoint f = flow_interpolate(x0[a], x1[a], sample.t);
    xt[a] = f.xt;
    vtrue[a] = f.velocity;
  }

  Value recon_z = zx;
  if (!sel.empty()) recon_z = tape.concat_rows({zx, tape.gather_rows(zy, sel)});
  Value ctx_z;
  if (!context.empty()) ctx_z = tape.gather_rows(zy, unsel);

  const StructForward sf =
      struct_forward(tape, recon, forced_inter, forced_cross, xt, recon_z,
                     context, ctx_z, sample.t);

  // --- velocity reconstruction ---------------------------------------------
  Tensor vtrue_col(3 * a_recon, 1);
  std::vector<std::size_t> seg3blk(3 * a_recon);
  std::vector<double> atoms_in(n_blocks, 0.0);
  for (std::size_t a = 0; a < a_recon; ++a) {
    atoms_in[block_of[a]] += 1.0;
    for (std::size_t k = 0; k < 3; ++k) {
      vtrue_col(3 * a + k, 0) = vtrue[a][k];
      seg3blk[3 * a + k] = block_of[a];
    }
  }
  Tensor inv_atoms(n_blocks, 1);
  for (std::size_t r = 0; r < n_blocks; ++r)
    inv_atoms(r, 0) = 1.0 / (3.0 * atoms_in[r]);
  Value mse_rows = tape.mul(
      tape.segment_sum(
          tape.square(tape.sub(sf.velocity, tape.constant(std::move(vtrue_col)))),
          seg3blk, n_blocks),
      tape.constant(std::move(inv_atoms)));

  // --- bond reconstruction over ground-truth-close pairs --------------------
  std::map<std::pair<std::size_t, std::size_t>, int> bond_label;
  for (const InterBond& ib : recon_inter_truth) {
    std::size_t pa = recon_off[ib.i] + ib.p, pb = recon_off[ib.j] + ib.q;
    if (pa > pb) std::swap(pa, pb);
    bond_label[{pa, pb}] = ib.order;
  }
  std::vector<std::size_t> pair_a, pair_b, seg_a, seg_b;
  std::vector<int> pair_labels;
  for (std::size_t p = 0; p < a_recon; ++p)
    for (std::size_t q = p + 1; q < a_recon; ++q) {
      if (block_of[p] == block_of[q]) continue;
      if (distance(x0[p], x0[q]) >= cfg.bond_candidate_radius) continue;
      pair_a.push_back(p);
      pair_b.push_back(q);
      seg_a.push_back(block_of[p]);
      seg_b.push_back(block_of[q]);
      const auto it = bond_label.find({p, q});
      pair_labels.push_back(it == bond_label.end() ? 0 : it->second);
    }
  Value bond_rows;
  if (pair_a.empty()) {
    bond_rows = tape.constant(Tensor(n_blocks, 1));
  } else {
    Value hsum = tape.add(tape.gather_rows(sf.hidden, pair_a),
                          tape.gather_rows(sf.hidden, pair_b));
    Value ce = tape.cross_entropy_rows(bond_logits_on_tape(tape, hsum),
                                       pair_labels);
    bond_rows = tape.add(tape.segment_sum(ce, seg_a, n_blocks),
                         tape.segment_sum(ce, seg_b, n_blocks));
  }

  // --- local distance consistency (late flow times only) --------------------
  Value dist_rows;
  if (sample.t < cfg.dist_loss_tmax) {
    Tensor xt_col(3 * a_recon, 1);
    for (std::size_t a = 0; a < a_recon; ++a)
      for (std::size_t k = 0; k < 3; ++k) xt_col(3 * a + k, 0) = xt[a][k];
    Value xhat = tape.add(tape.constant(std::move(xt_col)),
                          tape.scale(sf.velocity, sample.t));

    std::vector<Vec3> true_all = x0;
    Value xall = xhat;
    if (a_ctx > 0) {
      Tensor ctx_col(3 * a_ctx, 1);
      std::size_t a = 0;
      for (const Block& blk : context.blocks)
        for (const Atom& atom : blk.atoms) {
          true_all.push_back(atom.coord);
          for (std::size_t k = 0; k < 3; ++k)
            ctx_col(3 * a + k, 0) = atom.coord[k];
          ++a;
        }
      xall = tape.concat_rows({xhat, tape.constant(std::move(ctx_col))});
    }

    std::vector<std::size_t> plist, qlist, pseg;
    std::vector<double> dtrue;
    std::vector<double> den(n_blocks, 0.0);
    for (std::size_t p = 0; p < a_recon; ++p)
      for (std::size_t q = 0; q < true_all.size(); ++q) {
        if (q == p) continue;
        const double d0 = distance(x0[p], true_all[q]);
        if (d0 >= cfg.dist_neighbor_radius) continue;
        plist.push_back(p);
        qlist.push_back(q);
        pseg.push_back(block_of[p]);
        dtrue.push_back(d0);
        den[block_of[p]] += 1.0;
      }
    if (plist.empty()) {
      dist_rows = tape.constant(Tensor(n_blocks, 1));
    } else {
      const std::size_t n_pairs = plist.size();
      Value dvec = tape.sub(tape.gather_rows(xall, rows3(plist)),
                            tape.gather_rows(xall, rows3(qlist)));
      Value dhat = tape.sqrt(tape.add_scalar(
          tape.segment_sum(tape.square(dvec), replicate3(n_pairs), n_pairs),
          1e-12));
      Value adiff = tape.abs(
          tape.sub(dhat, tape.constant(Tensor(n_pairs, 1, std::move(dtrue)))));
      Tensor inv_den(n_blocks, 1);
      for (std::size_t r = 0; r < n_blocks; ++r)
        inv_den(r, 0) = den[r] > 0.0 ? 1.0 / den[r] : 0.0;
      dist_rows = tape.mul(tape.segment_sum(adiff, pseg, n_blocks),
                           tape.constant(std::move(inv_den)));
    }
  } else {
    dist_rows = tape.constant(Tensor(n_blocks, 1));
  }

  // --- assemble ------------------------------------------------------------
  const double inv_b = 1.0 / static_cast<double>(n_blocks);
  auto block_mean = [&](Value rows_v) {
    return tape.scale(tape.sum_all(rows_v), inv_b);
  };
  Value kl_state_mean = block_mean(tape.scale(kl_state, cfg.lambda1));
  Value kl_coord_mean = block_mean(tape.scale(kl_coord, cfg.lambda2));
  Value type_mean = block_mean(type_rows);
  Value bond_mean = block_mean(bond_rows);
  Value mse_mean = block_mean(mse_rows);
  Value dist_mean = block_mean(tape.scale(dist_rows, cfg.lambda_dist));

  Value kl_mean = tape.add(kl_state_mean, kl_coord_mean);
  Value total = tape.add(
      tape.scale(kl_mean, kl_weight),
      tape.add(tape.add(type_mean, bond_mean),
               tape.add(mse_mean, dist_mean)));

  if (out) {
    auto sv = [&](Value v) { return tape.val(v)(0, 0); };
    out->kl = kl_weight * sv(kl_mean);
    out->rec = sv(type_mean) + sv(bond_mean) + sv(mse_mean);
    out->dist = sv(dist_mean);
    out->total = sv(total);
  }

  switch (term) {
    case VaeLossTerm::total: return total;
    case VaeLossTerm::kl_state: return kl_state_mean;
    case VaeLossTerm::kl_coord: return kl_coord_mean;
    case VaeLossTerm::type_ce: return type_mean;
    case VaeLossTerm::bond_ce: return bond_mean;
    case VaeLossTerm::velocity_mse: return mse_mean;
    case VaeLossTerm::distance: return dist_mean;
  }
  throw ConfigError("vae train: unknown loss term");
}

VaeTrainStats train_vae(VaeModel& model, ParamStore& store,
                        const std::vector<ComplexRecord>& dataset,
                        const VaeTrainConfig& cfg, RandomStream& rng,
                        std::size_t max_steps, const std::string& csv_path) {
  cfg.validate();
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (dataset[i].binder && !dataset[i].binder->empty()) usable.push_back(i);
  if (usable.empty())
    throw DataError("vae train: no records with binders in the dataset");

  std::ofstream csv;
  if (!csv_path.empty()) {
    csv.open(csv_path);
    if (!csv) throw DataError("vae train: cannot write '" + csv_path + "'");
    csv << "step,loss_kl,loss_rec,loss_dist,total\n";
  }

  Adam::Options opts;
  opts.lr = cfg.lr;
  opts.max_grad_norm = cfg.clip_norm;
  Adam adam(opts);

  const std::size_t total_steps =
      max_steps > 0 ? max_steps : cfg.epochs * usable.size();
  VaeTrainStats stats;
  stats.curve.reserve(total_steps);

  std::vector<std::size_t> order;
  std::size_t pos = 0;
  for (std::size_t step = 0; step < total_steps; ++step) {
    if (pos == order.size()) {
      const std::vector<std::size_t> perm = rng.permutation(usable.size());
      order.clear();
      for (std::size_t p : perm) order.push_back(usable[p]);
      pos = 0;
    }
    const ComplexRecord& rec = dataset[order[pos++]];
    const VaeModel::StepSample sample = model.draw_step_sample(rec, cfg, rng);
    const double kl_w =
        cfg.warmup == 0
            ? 1.0
            : std::min(1.0, static_cast<double>(step + 1) /
                                static_cast<double>(cfg.warmup));

    Tape tape;
    VaeLossBreakdown bd;
    Value loss = model.build_step_loss(tape, rec, sample, cfg, kl_w,
                                       VaeLossTerm::total, &bd);
    if (!std::isfinite(bd.total))
      throw NumericError("vae train: non-finite loss at step " +
                         std::to_string(step));
    tape.backward(loss);
    adam.step(store);

    stats.curve.push_back({static_cast<double>(step), bd.kl, bd.rec, bd.dist,
                           bd.total});
    stats.final_total = bd.total;
    if (csv.is_open())
      csv << step << ',' << bd.kl << ',' << bd.rec << ',' << bd.dist << ','
          << bd.total << '\n';
  }
  stats.steps = total_steps;
  return stats;
}

}  // namespace unimomo
