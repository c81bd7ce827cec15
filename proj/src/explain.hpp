// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "config.hpp"
#include "json.hpp"
#include "session.hpp"

namespace finch {

/// Batch explanation for one instance and one fixed chain.
///
/// Request: {"dataset_id", "x_feature", "chain": [names], "target"?, "instance"?,
/// "view"?}. The result holds the final-step payload plus, for every chain
/// step, its subset diagnostics, main effect and raw-mean decomposition.
/// Output is a pure function of the dataset and request.
nlohmann::json explain(std::shared_ptr<const DatasetEntry> dataset, const nlohmann::json& request,
                       const Config& config);

}  // namespace finch
