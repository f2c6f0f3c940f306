#pragma once

// Plain-text parameter files: one `key = value` per line, `#` starts a
// comment. Recognised keys:
//
//   width, prominence, snr       filter thresholds, optionally .ch5 / .ch9
//   k, pdoa_gate                 both channels, optionally .ch5 / .ch9
//   drop_truncated               true / false
//   eps, min_samples, min_peaks  clustering
//   bias.ch5, bias.ch9           range bias, cm
//   bias_aoa.ch5, bias_aoa.ch9   angle bias, rad
//   d_tx_rx, aoa_coeff           geometry
//   baseline_in_delay            true / false
//   n_noise                      noise-floor samples
//   mount.<rx>.x / .y / .yaw     receiver placement on the robot

#include "uwbmap/pipeline.hpp"

#include <istream>
#include <string>

namespace uwbmap {

// Applies every entry in order. Unknown keys and bad values throw
// Error{Config} naming the source and line.
void apply_params(std::istream& in, PipelineConfig& config, const std::string& source = "params");

bool parse_bool(const std::string& text);  // throws Error{Config}

}  // namespace uwbmap
