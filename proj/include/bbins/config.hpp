#pragma once

#include <string>

#include "bbins/experiments.hpp"

namespace bbins {

/// Parses a campaign description (JSON). Unknown keys are rejected with a ParseError naming the
/// key and its position.
///
/// Keys: name, n, b, m, process {kind, params, tie_breaking}, weights {kind, lambda, q},
/// sweep [{field, values}], runs_per_point, output, and optionally seed, midbatch_samples,
/// record_runtime and graph {kind, n, d, seed, file}. Only n is required; b defaults to n and
/// m to b.
Campaign parse_config_text(const std::string& text);
Campaign parse_config(const std::string& path);

/// Serialises a campaign so that parse_config_text(config_to_text(c)) == c.
std::string config_to_text(const Campaign& c);

}  // namespace bbins
