#ifndef INSTAB_SYNTH_HPP
#define INSTAB_SYNTH_HPP

#include "instab/bundle.hpp"

#include <cstdint>
#include <vector>

namespace instab {

struct SynthConfig {
  std::size_t n = 64;                         // samples
  int k = 2;                                  // classes
  std::vector<std::size_t> layer_widths{16, 16};
  std::size_t m = 10;                         // runs
  double noise_scale = 0.1;                   // sigma
  double failed_fraction = 0.0;               // floor(fraction * m) runs are built as failed
  double failed_update_scale = 0.1;           // multiplier on a failed run's perturbations
  double failed_blend = 0.9;                  // weight of the majority one-hot in failed readouts
  double label_noise = 0.1;                   // chance a gold label differs from the base readout
  double logit_scale = 2.0;                   // std of base logits
  MetricKind metric = MetricKind::accuracy;
  std::string dataset_name = "synthetic";
  std::uint64_t seed = 1;

  std::size_t failed_count() const;
  void validate() const;  // throws InvalidArgument
};

// Builds an ensemble around a shared base: per-layer base representations, a
// linear readout on the top layer, and gold labels from the base readout with
// label noise. Run r perturbs every layer l with i.i.d. Gaussian noise of
// scale sigma * (1 + l / L) and the readout with scale sigma; failed runs
// (the last failed_count() runs) scale their perturbations by
// failed_update_scale and blend their probabilities toward the majority
// class. All random draws happen in a fixed order independent of sigma, so a
// ladder of noise scales with one seed shares its underlying draws.
EnsembleBundle generate_ensemble(const SynthConfig& config);

}  // namespace instab

#endif  // INSTAB_SYNTH_HPP
