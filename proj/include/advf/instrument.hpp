// SPDX-License-Identifier: Apache-2.0
//
// Filling and clearing the encoder adapter slots of a TransformerModel.
#pragma once

#include <string>
#include <vector>

#include "advf/model.hpp"

namespace advf {

/// Binds the adapter `tag`, registering freshly initialised parameters when
/// the model does not hold it yet. The tag "task" is a task adapter, every
/// other tag a language adapter.
template <typename T>
Adapter<T> ensure_adapter(TransformerModel<T>& model, const std::string& tag);

/// Tags of every adapter registered on the model, in registration order.
template <typename T>
std::vector<std::string> registered_adapters(const TransformerModel<T>& model,
                                             bool languages_only = true);

// Every attach_* throws UsageError when a mechanism is already attached.

template <typename T>
void attach_adapter(TransformerModel<T>& model, const std::string& tag);

template <typename T>
void attach_lora(TransformerModel<T>& model);

/// Fusion over the language adapters `stack_tags` (which must already be
/// registered). Fusion parameters are created on first use.
template <typename T>
void attach_fusion(TransformerModel<T>& model, const std::vector<std::string>& stack_tags,
                   FusionMode mode = FusionMode::kFusion);

/// Empties every slot. Parameters stay registered.
template <typename T>
void detach(TransformerModel<T>& model);

}  // namespace advf
