//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include "unimomo/errors.hpp"
#include "unimomo/latent_ddpm.hpp"
#include "unimomo/optim.hpp"

namespace unimomo {

LdmTrainStats train_ldm(LatentDenoiser& denoiser, ParamStore& store,
                        const VaeModel& vae,
                        const std::vector<ComplexRecord>& dataset,
                        const NoiseSchedule& sched, const LdmTrainConfig& cfg,
                        RandomStream& rng, std::size_t max_steps,
                        const std::string& csv_path) {
  cfg.validate();
  sched.validate();
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (dataset[i].binder && !dataset[i].binder->empty()) usable.push_back(i);
  if (usable.empty())
    throw DataError("ldm train: no records with binders in the dataset");

  std::ofstream csv;
  if (!csv_path.empty()) {
    csv.open(csv_path);
    if (!csv) throw DataError("ldm train: cannot write '" + csv_path + "'");
    csv << "step,loss\n";
  }

  Adam::Options opts;
  opts.lr = cfg.lr;
  opts.max_grad_norm = cfg.clip_norm;
  Adam adam(opts);

  const std::size_t d = denoiser.config().latent_dim;
  const std::size_t total_steps =
      max_steps > 0 ? max_steps : cfg.epochs * usable.size();
  LdmTrainStats stats;
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

    // The frozen VAE maps the complex to latent targets; deterministic
    // encoding keeps the diffusion targets fixed across epochs.
    const std::vector<LatentPoint> lat_binder =
        vae.encode(*rec.binder, rng, true);
    const std::vector<LatentPoint> lat_site = vae.encode(rec.target, rng, true);
    std::vector<int> binder_prompts, site_prompts;
    for (const Block& blk : rec.binder->blocks)
      binder_prompts.push_back(blk.prompt);
    for (const Block& blk : rec.target.blocks)
      site_prompts.push_back(blk.prompt);
    const NormalizedLatents nl =
        normalize(lat_binder, lat_site, binder_prompts, site_prompts);

    const std::size_t t = 1 + rng.uniform_int(sched.T);
    const ForwardSample fs = forward_sample(nl.state, t, sched, rng);
    LatentState noisy = nl.state;
    noisy.u = fs.ut;

    const std::vector<std::size_t> gen = nl.state.generated_rows();
    const std::size_t g = gen.size();
    Tensor target_state(g, d);
    Tensor target_coord(3 * g, 1);
    for (std::size_t k = 0; k < g; ++k) {
      const std::size_t i = gen[k];
      for (std::size_t c = 0; c < d; ++c) target_state(k, c) = fs.eps(i, c);
      for (std::size_t a = 0; a < 3; ++a)
        target_coord(3 * k + a, 0) = fs.eps(i, d + a);
    }

    Tape tape;
    const LatentDenoiser::EpsOut pred =
        denoiser.predict_on_tape(tape, noisy, t, sched);
    Value diff_state = tape.sub(pred.state, tape.constant(target_state));
    Value diff_coord = tape.sub(pred.coord, tape.constant(target_coord));
    Value loss = tape.scale(tape.add(tape.sum_all(tape.square(diff_state)),
                                     tape.sum_all(tape.square(diff_coord))),
                            1.0 / static_cast<double>(g));
    const double loss_v = tape.val(loss)(0, 0);
    if (!std::isfinite(loss_v))
      throw NumericError("ldm train: non-finite loss at step " +
                         std::to_string(step));
    tape.backward(loss);
    adam.step(store);

    stats.curve.push_back({static_cast<double>(step), loss_v});
    stats.final_loss = loss_v;
    if (csv.is_open()) csv << step << ',' << loss_v << '\n';
  }
  stats.steps = total_steps;
  return stats;
}

}  // namespace unimomo
