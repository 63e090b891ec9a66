#pragma once

#include "ppcc/graph.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace ppcc {

enum class SharedQuantity { input_gramian, output_gramian, estimate };

std::string to_string(SharedQuantity q);

// One broadcast: every out-neighbor of sender receives the same value.
struct SharedMessage {
  SharedQuantity quantity;
  std::int64_t k = 0;  // plant step for estimates, 0 for Gramian fusion
  int round = 0;       // fusion round index of the transmitted value
  Index sender = 0;
  MatrixXd value;
};

using ShareLog = std::vector<SharedMessage>;

// 17 significant digits, enough to round-trip any double.
std::string format_double(double x);

// Fixed-order rendering with 17 significant digits; equal text iff equal doubles.
std::string canonical_form(const SharedMessage& m);

// Rows (quantity, k, l, sender, receiver, values...) expanded over receivers.
void write_share_log_csv(std::ostream& out, const ShareLog& log, const CommGraph& g);

}  // namespace ppcc
