// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0
//
// Plain SVG figures. Both plots use a 500×500 canvas with the unit square
// mapped to x = 50 + 400·u, y = 450 − 400·v.

#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace hyperfake::cli {

// ROC polyline from a metrics report ("roc": [{fpr, tpr, threshold}, ...]).
std::string roc_svg(const nlohmann::json& report);

// Loss (scaled by its maximum) and accuracy curves over epochs from a
// history array [{epoch, train_loss, train_acc, val_acc}, ...].
std::string history_svg(const nlohmann::json& history);

}  // namespace hyperfake::cli
