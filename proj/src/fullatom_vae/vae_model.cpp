//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "unimomo/aa_table.hpp"
#include "unimomo/elements.hpp"
#include "unimomo/errors.hpp"
#include "unimomo/fullatom_vae.hpp"

namespace unimomo {

namespace {

std::size_t elem_index(const std::string& symbol) {
  const auto& table = element_table();
  for (std::size_t i = 0; i < table.size(); ++i)
    if (table[i].symbol == symbol) return i;
  throw DataError("vae: unregistered element '" + symbol + "'");
}

// Per-atom view of a block graph's blocks: indices for embeddings, intra
// bonds in flat atom indices, per-block offsets. Inter-block bonds are left
// to the caller so each code path controls what the network sees.
struct FlatNodes {
  std::vector<Vec3> coords;
  std::vector<std::size_t> elem;      // element table index per atom
  std::vector<std::size_t> btype;     // vocabulary index per atom
  std::vector<std::size_t> block_of;  // owning block per atom
  std::vector<BondSpec> intra;        // flat intra-block bonds
  std::vector<std::size_t> offsets;   // first flat index of each block
};

FlatNodes flatten_nodes(const BlockGraph& g, const blockrepr::Vocabulary& vocab) {
  FlatNodes out;
  std::size_t base = 0;
  for (std::size_t i = 0; i < g.blocks.size(); ++i) {
    const Block& b = g.blocks[i];
    if (b.atoms.empty())
      throw DataError("vae: block " + std::to_string(i) + " has no atoms");
    const auto idx = vocab.index_of(b.block_type);
    if (!idx)
      throw DataError("vae: block type '" + b.block_type +
                      "' is not in the vocabulary");
    out.offsets.push_back(base);
    for (const Atom& a : b.atoms) {
      out.coords.push_back(a.coord);
      out.elem.push_back(elem_index(a.element));
      out.btype.push_back(*idx);
      out.block_of.push_back(i);
    }
    for (const IntraBond& bd : b.intra_bonds)
      out.intra.push_back({base + bd.p, base + bd.q, bd.order});
    base += b.atoms.size();
  }
  return out;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

bool tensor_finite(const Tensor& t) {
  for (double x : t.vec())
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

VaeModel::VaeModel(ParamStore& store, const std::string& prefix,
                   const blockrepr::Vocabulary& vocab, const VaeConfig& cfg,
                   RandomStream& rng)
    : vocab_(&vocab),
      cfg_((cfg.validate(), cfg)),
      enc_net_(store, prefix + ".enc.net", cfg.net, rng),
      type_net_(store, prefix + ".type.net", cfg.net, rng),
      struct_net_(store, prefix + ".struct.net", cfg.net, rng) {
  if (vocab.size() == 0) throw ConfigError("vae: empty vocabulary");
  for (const blockrepr::FragmentEntry& e : vocab.entries())
    if (e.is_amino_acid) ++n_aa_entries_;

  const std::size_t F = cfg_.net.hidden_size;
  const std::size_t d = cfg_.latent_dim;
  const std::size_t V = vocab.size();
  const std::size_t E = element_table().size();
  const std::size_t Vc = cfg_.net.vector_channels;
  const std::size_t Tf = 2 * cfg_.time_feature_pairs;

  auto w = [&](const std::string& n, std::size_t in, std::size_t out) {
    return &store.create_linear_weight(prefix + n, in, out, rng);
  };
  auto b = [&](const std::string& n, std::size_t out) {
    return &store.create(prefix + n, 1, out);
  };

  enc_elem_emb_ = w(".enc.elem_emb", E, F);
  enc_btype_emb_ = w(".enc.btype_emb", V, F);
  enc_mu_w_ = w(".enc.mu.w", F, d);
  enc_mu_b_ = b(".enc.mu.b", d);
  enc_sigma_w_ = w(".enc.sigma.w", F, d);
  enc_sigma_b_ = b(".enc.sigma.b", d);
  enc_vecread_ = w(".enc.vecread", Vc, 1);
  enc_sigmavec_w_ = w(".enc.sigmavec.w", F, 1);
  enc_sigmavec_b_ = b(".enc.sigmavec.b", 1);

  type_z_w_ = w(".type.z.w", d, F);
  type_z_b_ = b(".type.z.b", F);
  type_ctx_emb_ = w(".type.ctx_emb", 2, F);
  type_head_w_ = w(".type.head.w", F, V);
  type_head_b_ = b(".type.head.b", V);

  str_elem_emb_ = w(".struct.elem_emb", E, F);
  str_btype_emb_ = w(".struct.btype_emb", V, F);
  str_ctx_emb_ = w(".struct.ctx_emb", 2, F);
  str_z_w_ = w(".struct.z.w", d, F);
  str_z_b_ = b(".struct.z.b", F);
  str_time_w_ = w(".struct.time.w", Tf, F);
  str_time_b_ = b(".struct.time.b", F);
  str_vecread_ = w(".struct.vecread", Vc, 1);
  bond_w1_ = w(".bond.w1", F, F);
  bond_b1_ = b(".bond.b1", F);
  bond_w2_ = w(".bond.w2", F, F);
  bond_b2_ = b(".bond.b2", F);
  bond_w3_ = w(".bond.w3", F, 4);
  bond_b3_ = b(".bond.b3", 4);
}

void VaeModel::check_finite(const Tensor& t, const std::string& what) const {
  if (!tensor_finite(t))
    throw NumericError("vae: non-finite " + what);
}

// ------------------------------------------------------------------ encoder

VaeModel::EncodeOut VaeModel::encode_on_tape(Tape& tape,
                                             const BlockGraph& graph) const {
  if (graph.empty()) throw DataError("vae encode: empty graph");
  FlatNodes fn = flatten_nodes(graph, *vocab_);
  const std::size_t n_blocks = graph.blocks.size();
  const std::size_t n_atoms = fn.coords.size();
  const std::size_t Vc = cfg_.net.vector_channels;

  std::vector<BondSpec> bonds = fn.intra;
  for (const InterBond& ib : graph.inter_bonds)
    bonds.push_back({fn.offsets[ib.i] + ib.p, fn.offsets[ib.j] + ib.q,
                     ib.order});
  const std::vector<int> ctx(n_atoms, 0);
  const EdgeList edges = build_edges(fn.coords, ctx, bonds, cfg_.net.cutoff);

  Value scalars =
      tape.add(tape.gather_rows(tape.param(*enc_elem_emb_), fn.elem),
               tape.gather_rows(tape.param(*enc_btype_emb_), fn.btype));
  Value vectors = tape.constant(Tensor(3 * n_atoms, Vc));
  const EqNet::TapeOut net = enc_net_.run(tape, scalars, vectors, fn.coords,
                                          edges);

  Value pooled_h = tape.segment_mean(net.scalars, fn.block_of, n_blocks);
  std::vector<std::size_t> seg3(3 * n_atoms);
  for (std::size_t a = 0; a < n_atoms; ++a)
    for (std::size_t k = 0; k < 3; ++k)
      seg3[3 * a + k] = 3 * fn.block_of[a] + k;
  Value pooled_v = tape.segment_mean(net.vectors, seg3, 3 * n_blocks);

  EncodeOut out;
  out.mu = tape.linear(pooled_h, tape.param(*enc_mu_w_),
                       tape.param(*enc_mu_b_));
  out.sigma = tape.add_scalar(
      tape.softplus(tape.linear(pooled_h, tape.param(*enc_sigma_w_),
                                tape.param(*enc_sigma_b_))),
      1e-3);

  Tensor centers(3 * n_blocks, 1);
  out.prior_centers.resize(n_blocks);
  for (std::size_t i = 0; i < n_blocks; ++i) {
    out.prior_centers[i] = block_centroid(graph.blocks[i]);
    for (std::size_t k = 0; k < 3; ++k)
      centers(3 * i + k, 0) = out.prior_centers[i][k];
  }
  out.muvec = tape.add(tape.constant(std::move(centers)),
                       tape.matmul(pooled_v, tape.param(*enc_vecread_)));
  out.sigmavec = tape.add_scalar(
      tape.softplus(tape.linear(pooled_h, tape.param(*enc_sigmavec_w_),
                                tape.param(*enc_sigmavec_b_))),
      1e-3);
  return out;
}

std::vector<LatentPoint> VaeModel::encode(const BlockGraph& graph,
                                          RandomStream& rng,
                                          bool deterministic) const {
  Tape tape;
  const EncodeOut eo = encode_on_tape(tape, graph);
  const Tensor& mu = tape.val(eo.mu);
  const Tensor& sigma = tape.val(eo.sigma);
  const Tensor& muvec = tape.val(eo.muvec);
  const Tensor& sigmavec = tape.val(eo.sigmavec);
  check_finite(mu, "encoder state mean");
  check_finite(sigma, "encoder state spread");
  check_finite(muvec, "encoder coordinate mean");
  check_finite(sigmavec, "encoder coordinate spread");

  const std::size_t d = cfg_.latent_dim;
  std::vector<LatentPoint> points(graph.blocks.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    LatentPoint& p = points[i];
    p.mu.resize(d);
    p.sigma.resize(d);
    p.z.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
      p.mu[k] = mu(i, k);
      p.sigma[k] = sigma(i, k);
      p.z[k] = deterministic ? p.mu[k] : p.mu[k] + rng.normal() * p.sigma[k];
    }
    p.sigmavec = sigmavec(i, 0);
    p.prior_center = eo.prior_centers[i];
    for (std::size_t k = 0; k < 3; ++k) {
      p.muvec[k] = muvec(3 * i + k, 0);
      p.zvec[k] = deterministic ? p.muvec[k]
                                : p.muvec[k] + rng.normal() * p.sigmavec;
    }
  }
  return points;
}

// ------------------------------------------------------------- type decoder

Value VaeModel::type_logits_on_tape(Tape& tape, Value z_states,
                                    const LatentNodes& nodes,
                                    const std::vector<std::size_t>& rows,
                                    const std::vector<int>& prompts) const {
  const std::size_t n = nodes.coords.size();
  const std::size_t V = vocab_->size();
  const std::size_t Vc = cfg_.net.vector_channels;
  for (int p : prompts)
    if (p != 0 && p != 1)
      throw DataError("vae: prompts must be 0 or 1");
  if (n_aa_entries_ == 0 &&
      std::any_of(prompts.begin(), prompts.end(), [](int p) { return p == 1; }))
    throw ConfigError(
        "vae: prompt requires amino-acid entries, but the vocabulary has "
        "none");

  const EdgeList edges =
      build_edges(nodes.coords, nodes.context, {}, cfg_.net.cutoff);
  std::vector<std::size_t> ctx_idx(nodes.context.begin(), nodes.context.end());
  Value scalars =
      tape.add(tape.linear(z_states, tape.param(*type_z_w_),
                           tape.param(*type_z_b_)),
               tape.gather_rows(tape.param(*type_ctx_emb_), ctx_idx));
  Value vectors = tape.constant(Tensor(3 * n, Vc));
  const EqNet::TapeOut net =
      type_net_.run(tape, scalars, vectors, nodes.coords, edges);

  Value logits = tape.linear(tape.gather_rows(net.scalars, rows),
                             tape.param(*type_head_w_),
                             tape.param(*type_head_b_));
  // Additive prompt mask: -1e30 drives masked probabilities to exactly zero
  // through the softmax/cross-entropy path.
  Tensor mask(rows.size(), V);
  bool any = false;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (prompts[r] != 1) continue;
    for (std::size_t j = 0; j < V; ++j)
      if (!vocab_->entries()[j].is_amino_acid) {
        mask(r, j) = -1e30;
        any = true;
      }
  }
  if (any) logits = tape.add(logits, tape.constant(std::move(mask)));
  return logits;
}

Tensor VaeModel::decode_type_logits(const std::vector<LatentPoint>& binder,
                                    const std::vector<LatentPoint>& site,
                                    const std::vector<int>& prompts) const {
  if (binder.empty()) throw DataError("vae decode: no binder latents");
  if (prompts.size() != binder.size())
    throw DataError("vae decode: prompts must align with binder latents");
  const std::size_t d = cfg_.latent_dim;

  LatentNodes nodes;
  Tensor z(binder.size() + site.size(), d);
  std::size_t row = 0;
  for (const auto* group : {&binder, &site}) {
    for (const LatentPoint& p : *group) {
      if (p.z.size() != d)
        throw DataError("vae decode: latent state dimension mismatch");
      std::copy(p.z.begin(), p.z.end(), z.row_ptr(row));
      nodes.coords.push_back(p.zvec);
      nodes.context.push_back(group == &site ? 1 : 0);
      ++row;
    }
  }

  Tape tape;
  Value logits = type_logits_on_tape(tape, tape.constant(std::move(z)), nodes,
                                     iota_rows(binder.size()), prompts);
  Tensor out = tape.val(logits);
  check_finite(out, "type logits");
  return out;
}

std::vector<std::size_t> VaeModel::decode_types(
    const std::vector<LatentPoint>& binder,
    const std::vector<LatentPoint>& site,
    const std::vector<int>& prompts) const {
  const Tensor logits = decode_type_logits(binder, site, prompts);
  std::vector<std::size_t> ids(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < logits.cols(); ++j)
      if (logits(i, j) > logits(i, best)) best = j;
    ids[i] = best;
  }
  return ids;
}

BlockGraph VaeModel::blocks_from_types(
    const std::vector<std::size_t>& type_ids,
    const std::vector<int>& prompts) const {
  if (prompts.size() != type_ids.size())
    throw DataError("vae: prompts must align with type ids");
  BlockGraph g;
  for (std::size_t i = 0; i < type_ids.size(); ++i) {
    if (type_ids[i] >= vocab_->size())
      throw DataError("vae: type id out of vocabulary range");
    const blockrepr::FragmentEntry& e = vocab_->entries()[type_ids[i]];
    if (prompts[i] == 1 && !e.is_amino_acid)
      throw DataError("vae: prompt 1 requires an amino-acid type");
    Block b;
    if (e.is_amino_acid) {
      const ResidueTemplate* rt = find_residue(e.key);
      if (!rt) throw DataError("vae: unknown residue '" + e.key + "'");
      b = residue_block(*rt);
    } else {
      b.block_type = e.key;
      for (std::size_t a = 0; a < e.atoms.size(); ++a)
        b.atoms.push_back(
            {e.atoms[a], e.atoms[a] + std::to_string(a + 1), {0.0, 0.0, 0.0}});
      b.intra_bonds = e.bonds;
    }
    b.prompt = prompts[i];
    g.blocks.push_back(std::move(b));
  }
  return g;
}

// -------------------------------------------------------- structure decoder

VaeModel::StructForward VaeModel::struct_forward(
    Tape& tape, const BlockGraph& recon,
    const std::vector<InterBond>& recon_inter,
    const std::vector<BondSpec>& cross_bonds,
    const std::vector<Vec3>& recon_coords, Value recon_z,
    const BlockGraph& context, Value context_z, double t) const {
  const std::size_t Vc = cfg_.net.vector_channels;
  FlatNodes fr = flatten_nodes(recon, *vocab_);
  const std::size_t a_recon = fr.coords.size();
  if (recon_coords.size() != a_recon)
    throw DataError("vae structure: coordinate count mismatch");

  std::vector<Vec3> coords = recon_coords;
  std::vector<int> ctx(a_recon, 0);
  std::vector<std::size_t> elem = fr.elem, btype = fr.btype;
  std::vector<BondSpec> bonds = fr.intra;
  for (const InterBond& ib : recon_inter)
    bonds.push_back({fr.offsets[ib.i] + ib.p, fr.offsets[ib.j] + ib.q,
                     ib.order});

  Value zatoms_r = tape.gather_rows(
      tape.linear(recon_z, tape.param(*str_z_w_), tape.param(*str_z_b_)),
      fr.block_of);
  Value zatoms = zatoms_r;

  if (!context.empty()) {
    FlatNodes fc = flatten_nodes(context, *vocab_);
    coords.insert(coords.end(), fc.coords.begin(), fc.coords.end());
    ctx.insert(ctx.end(), fc.coords.size(), 1);
    elem.insert(elem.end(), fc.elem.begin(), fc.elem.end());
    btype.insert(btype.end(), fc.btype.begin(), fc.btype.end());
    for (const BondSpec& bs : fc.intra)
      bonds.push_back({a_recon + bs.i, a_recon + bs.j, bs.order});
    for (const InterBond& ib : context.inter_bonds)
      bonds.push_back({a_recon + fc.offsets[ib.i] + ib.p,
                       a_recon + fc.offsets[ib.j] + ib.q, ib.order});
    Value zatoms_c = tape.gather_rows(
        tape.linear(context_z, tape.param(*str_z_w_), tape.param(*str_z_b_)),
        fc.block_of);
    zatoms = tape.concat_rows({zatoms_r, zatoms_c});
  }
  bonds.insert(bonds.end(), cross_bonds.begin(), cross_bonds.end());

  const std::size_t n = coords.size();
  std::vector<std::size_t> ctx_idx(ctx.begin(), ctx.end());
  Value emb = tape.add(
      tape.add(tape.gather_rows(tape.param(*str_elem_emb_), elem),
               tape.gather_rows(tape.param(*str_btype_emb_), btype)),
      tape.gather_rows(tape.param(*str_ctx_emb_), ctx_idx));
  Value tproj =
      tape.linear(tape.constant(time_features(t, cfg_.time_feature_pairs)),
                  tape.param(*str_time_w_), tape.param(*str_time_b_));
  Value scalars = tape.add_rowvec(tape.add(emb, zatoms), tproj);
  Value vectors = tape.constant(Tensor(3 * n, Vc));

  const EdgeList edges = build_edges(coords, ctx, bonds, cfg_.net.cutoff);
  const EqNet::TapeOut net =
      struct_net_.run(tape, scalars, vectors, coords, edges);

  StructForward out;
  out.hidden = tape.gather_rows(net.scalars, iota_rows(a_recon));
  out.velocity = tape.matmul(
      tape.gather_rows(net.vectors, rows3(iota_rows(a_recon))),
      tape.param(*str_vecread_));
  return out;
}

namespace {

Tensor latent_state_matrix(const std::vector<LatentPoint>& points,
                           std::size_t d, const char* what) {
  Tensor z(points.size(), d);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].z.size() != d)
      throw DataError(std::string("vae: ") + what +
                      " latent state dimension mismatch");
    std::copy(points[i].z.begin(), points[i].z.end(), z.row_ptr(i));
  }
  return z;
}

}  // namespace

std::vector<AtomState> VaeModel::structure_step(
    const BlockGraph& binder, const std::vector<InterBond>& known_inter,
    const std::vector<AtomState>& atoms,
    const std::vector<LatentPoint>& lat_binder,
    const std::vector<LatentPoint>& lat_site, const BlockGraph& site,
    double t, double dt) const {
  if (!(t > 0.0 && t <= 1.0))
    throw ConfigError("structure step: t must lie in (0, 1]");
  if (!(dt >= 0.0 && dt <= t))
    throw ConfigError("structure step: dt must lie in [0, t]");
  if (atoms.size() != binder.atom_count())
    throw DataError("structure step: atom state count mismatch");
  if (lat_binder.size() != binder.blocks.size())
    throw DataError("structure step: binder latent count mismatch");
  if (lat_site.size() != site.blocks.size())
    throw DataError("structure step: site latent count mismatch");

  const std::size_t d = cfg_.latent_dim;
  std::vector<Vec3> coords(atoms.size());
  for (std::size_t a = 0; a < atoms.size(); ++a) coords[a] = atoms[a].coord;

  Tape tape;
  Value zb = tape.constant(latent_state_matrix(lat_binder, d, "binder"));
  Value zs = tape.constant(latent_state_matrix(lat_site, d, "site"));
  const StructForward sf = struct_forward(tape, binder, known_inter, {},
                                          coords, zb, site, zs, t);
  const Tensor& hidden = tape.val(sf.hidden);
  const Tensor& vel = tape.val(sf.velocity);
  check_finite(hidden, "structure hidden state");
  if (!tensor_finite(vel))
    throw NumericError("structure step: non-finite velocity");

  std::vector<AtomState> out(atoms.size());
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    AtomState& s = out[a];
    s.hidden.assign(hidden.row_ptr(a), hidden.row_ptr(a) + hidden.cols());
    for (std::size_t k = 0; k < 3; ++k) {
      s.velocity[k] = vel(3 * a + k, 0);
      s.coord[k] = atoms[a].coord[k] + dt * s.velocity[k];
    }
    s.t = std::max(0.0, t - dt);
  }
  return out;
}

VaeModel::StructureResult VaeModel::decode_structure(
    const BlockGraph& binder, const std::vector<LatentPoint>& lat_binder,
    const std::vector<LatentPoint>& lat_site, const BlockGraph& site,
    const std::vector<InterBond>* known_inter, RandomStream& rng,
    std::size_t n_iters, double bond_candidate_radius) const {
  if (binder.empty()) throw DataError("decode structure: empty binder");
  if (n_iters == 0)
    throw ConfigError("decode structure: n_iters must be positive");
  if (lat_binder.size() != binder.blocks.size())
    throw DataError("decode structure: binder latent count mismatch");

  // Initial coordinates around each block's latent coordinate.
  std::vector<AtomState> states;
  std::vector<std::size_t> block_of;
  for (std::size_t i = 0; i < binder.blocks.size(); ++i)
    for (std::size_t a = 0; a < binder.blocks[i].atoms.size(); ++a) {
      AtomState s;
      for (std::size_t k = 0; k < 3; ++k)
        s.coord[k] = lat_binder[i].zvec[k] + rng.normal();
      s.t = 1.0;
      states.push_back(std::move(s));
      block_of.push_back(i);
    }

  static const std::vector<InterBond> kNoBonds;
  const std::vector<InterBond>& forced = known_inter ? *known_inter : kNoBonds;
  const double dt = 1.0 / static_cast<double>(n_iters);
  for (std::size_t n = 0; n < n_iters; ++n) {
    // (n_iters - n) / n_iters walks 1.0 -> dt so the final step lands on
    // t - dt == 0 exactly.
    const double t = static_cast<double>(n_iters - n) /
                     static_cast<double>(n_iters);
    states = structure_step(binder, forced, states, lat_binder, lat_site,
                            site, t, dt);
  }

  StructureResult res;
  res.coords.resize(states.size());
  for (std::size_t a = 0; a < states.size(); ++a)
    res.coords[a] = states[a].coord;

  if (known_inter) {
    res.inter_bonds = *known_inter;
  } else {
    std::vector<std::size_t> offsets;
    flatten(binder, &offsets);
    for (std::size_t p = 0; p < states.size(); ++p)
      for (std::size_t q = p + 1; q < states.size(); ++q) {
        if (block_of[p] == block_of[q]) continue;
        if (distance(res.coords[p], res.coords[q]) >= bond_candidate_radius)
          continue;
        const std::vector<double> probs =
            bond_probs(states[p].hidden, states[q].hidden);
        std::size_t best = 0;
        for (std::size_t k = 1; k < 4; ++k)
          if (probs[k] > probs[best]) best = k;
        if (best > 0)
          res.inter_bonds.push_back({block_of[p], p - offsets[block_of[p]],
                                     block_of[q], q - offsets[block_of[q]],
                                     static_cast<int>(best)});
      }
  }
  res.atoms = std::move(states);
  return res;
}

Value VaeModel::bond_logits_on_tape(Tape& tape, Value hidden_sum) const {
  Value h1 = tape.silu(tape.linear(hidden_sum, tape.param(*bond_w1_),
                                   tape.param(*bond_b1_)));
  Value h2 = tape.silu(tape.linear(h1, tape.param(*bond_w2_),
                                   tape.param(*bond_b2_)));
  return tape.linear(h2, tape.param(*bond_w3_), tape.param(*bond_b3_));
}

std::vector<double> VaeModel::bond_probs(const std::vector<double>& hp,
                                         const std::vector<double>& hq) const {
  const std::size_t F = cfg_.net.hidden_size;
  if (hp.size() != F || hq.size() != F)
    throw DataError("bond probs: hidden size mismatch");
  Tensor sum(1, F);
  for (std::size_t j = 0; j < F; ++j) sum(0, j) = hp[j] + hq[j];
  Tape tape;
  Value probs = tape.softmax_rows(
      bond_logits_on_tape(tape, tape.constant(std::move(sum))));
  const Tensor& out = tape.val(probs);
  return {out(0, 0), out(0, 1), out(0, 2), out(0, 3)};
}

// ------------------------------------------------------------ full sampling

VaeModel::SampleResult VaeModel::sample_vae(
    const std::vector<LatentPoint>& lat_binder,
    const std::vector<LatentPoint>& lat_site, const BlockGraph& site,
    const std::vector<int>& prompts, RandomStream& rng,
    std::size_t n_iters) const {
  const std::vector<std::size_t> types =
      decode_types(lat_binder, lat_site, prompts);
  BlockGraph skeleton = blocks_from_types(types, prompts);

  SampleResult res;
  StructureResult pass1 = decode_structure(skeleton, lat_binder, lat_site,
                                           site, nullptr, rng, n_iters);
  ++res.structure_passes;

  std::vector<std::size_t> offsets;
  flatten(skeleton, &offsets);
  auto apply_coords = [&](BlockGraph& g, const std::vector<Vec3>& coords) {
    std::size_t a = 0;
    for (Block& b : g.blocks)
      for (Atom& atom : b.atoms) atom.coord = coords[a++];
  };
  apply_coords(skeleton, pass1.coords);
  skeleton.inter_bonds = pass1.inter_bonds;

  const std::vector<LatentPoint> relat = encode(skeleton, rng);
  ++res.reencodes;

  StructureResult pass2 =
      decode_structure(skeleton, relat, lat_site, site, &pass1.inter_bonds,
                       rng, n_iters);
  ++res.structure_passes;

  apply_coords(skeleton, pass2.coords);
  res.binder = std::move(skeleton);
  return res;
}

}  // namespace unimomo
