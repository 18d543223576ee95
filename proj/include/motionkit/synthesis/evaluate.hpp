#pragma once

#include <string>
#include <vector>

#include "motionkit/harness/train.hpp"
#include "motionkit/synthesis/synthesizer.hpp"

namespace motionkit::synthesis {

/// Target-location classifier scored on real and on synthetic frames.
struct SynthesisReport {
  Location source;
  Location target;
  harness::EvalResult real;
  harness::EvalResult synthetic;

  double gap() const { return real.macro_f1 - synthetic.macro_f1; }
};

inline SynthesisReport evaluate_synthesis(nn::MotionNet<float>& target_classifier, const ImageSet& synthetic,
                                          const ImageSet& real, bool include_other = false) {
  SynthesisReport r;
  if (!synthetic.empty()) r.target = synthetic.front()->location;
  r.real = harness::evaluate(target_classifier, real, include_other);
  r.synthetic = harness::evaluate(target_classifier, synthetic, include_other);
  return r;
}

}  // namespace motionkit::synthesis
