#include "ppcc/share_log.hpp"

#include <cstdio>

namespace ppcc {

std::string to_string(SharedQuantity q) {
  switch (q) {
    case SharedQuantity::input_gramian: return "input_gramian";
    case SharedQuantity::output_gramian: return "output_gramian";
    case SharedQuantity::estimate: return "estimate";
  }
  return "unknown";
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string canonical_form(const SharedMessage& m) {
  std::string s = to_string(m.quantity) + "|" + std::to_string(m.k) + "|" + std::to_string(m.round) + "|" +
                  std::to_string(m.sender) + "|" + std::to_string(m.value.rows()) + "x" +
                  std::to_string(m.value.cols());
  for (Index r = 0; r < m.value.rows(); ++r)
    for (Index c = 0; c < m.value.cols(); ++c) s += "|" + format_double(m.value(r, c));
  return s;
}

void write_share_log_csv(std::ostream& out, const ShareLog& log, const CommGraph& g) {
  out << "quantity,k,l,sender,receiver,values\n";
  for (const auto& m : log) {
    std::string values;
    for (Index r = 0; r < m.value.rows(); ++r)
      for (Index c = 0; c < m.value.cols(); ++c) values += (values.empty() ? "" : " ") + format_double(m.value(r, c));
    for (Index receiver : g.out_neighbors(m.sender))
      out << to_string(m.quantity) << ',' << m.k << ',' << m.round << ',' << m.sender << ',' << receiver << ','
          << values << '\n';
  }
}

}  // namespace ppcc
