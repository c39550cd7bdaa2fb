// picdiar/synth.hpp
//
// Synthetic recordings drawn from the PLDA generative model with Markov
// turn-taking, used for end-to-end validation and as CLI-producible test
// data.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "picdiar/plda.hpp"
#include "picdiar/types.hpp"

namespace picdiar {

struct SynthRecordingConfig {
  int n_speakers = 4;
  int n_segments = 200;
  double window = 1.5;
  double shift = 0.75;
  double p_stay = 0.9;  // probability the next segment keeps the speaker
};

struct SynthRecording {
  RecordingEmbeddings rec;
  SpeakerSegmentation reference;
  std::vector<int> true_labels;  // per segment
};

// Ground-truth model with a random well-conditioned mixing matrix and the
// given diagonal between-class variance.
PldaModel make_random_plda(int dim, const Vector& psi, uint64_t seed);

// One recording: speakers get latent identities v ~ N(0, psi); the active
// speaker follows a sticky Markov chain over segments; each segment's
// embedding is x = m + V^{-1}(v + e), e ~ N(0, I).
SynthRecording synth_recording(const PldaModel& truth, const std::string& recording_id,
                               const SynthRecordingConfig& cfg, uint64_t seed);

}  // namespace picdiar
