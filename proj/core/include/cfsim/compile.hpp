#pragma once

#include "cfsim/circuit.hpp"
#include "cfsim/models.hpp"

namespace cfsim {

enum class GateSet { AndXor, AndOnly };

struct CompileOptions {
  Multiplier mult = Multiplier::Csd;
  /// AndOnly compiles with Xor gates and then runs decompose_xors.
  GateSet gates = GateSet::AndXor;
  BuildOptions build;
};

// Every compiler takes 8 primary inputs per byte feature, LSB first,
// feature-major, and emits one output bus per class named "class0".."class9".

/// 10 signed 16-bit (A16F6) pre-softmax activations.
Circuit compile_mlp(const QuantizedMlp& q, const CompileOptions& options = {});
/// 10 unsigned 16-bit per-class count totals.
Circuit compile_forest(const ForestModel& f, const CompileOptions& options = {});
/// 10 one-bit buses, one-hot.
Circuit compile_lut(const LutModel& l, const CompileOptions& options = {});

/// Dispatches on the model kind; float MLPs are quantized first.
Circuit compile_model(const AnyModel& m, const CompileOptions& options = {});

}  // namespace cfsim
