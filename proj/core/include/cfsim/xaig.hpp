#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "cfsim/circuit.hpp"

namespace cfsim {

/// Malformed XAIG text. line() is 1-based; 0 means end of input.
class XaigError : public std::runtime_error {
 public:
  XaigError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Line-oriented format:
//   xaig <num_nodes> <num_inputs>
//   <id> AND|XOR <lit> <lit>          one line per gate, ids ascending
//   bus <name> <width> <lit>...       in declaration order
// A literal is <node_id> or !<node_id>. '#' starts a comment. Node 0 is the
// constant and inputs are nodes 1..num_inputs; neither is listed.

void write_xaig(const Circuit& circuit, std::ostream& out);
Circuit read_xaig(std::istream& in);

std::string to_xaig_string(const Circuit& circuit);
Circuit from_xaig_string(const std::string& text);

void save_xaig(const Circuit& circuit, const std::filesystem::path& path);
Circuit load_xaig(const std::filesystem::path& path);

}  // namespace cfsim
