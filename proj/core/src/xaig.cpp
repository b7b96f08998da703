#include "cfsim/xaig.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

namespace cfsim {

XaigError::XaigError(std::size_t line, const std::string& what)
    : std::runtime_error(line == 0 ? "xaig: " + what
                                   : "xaig line " + std::to_string(line) + ": " + what),
      line_{line}
{
}

namespace {

void put_literal(std::ostream& out, Literal l)
{
  if (l.complemented()) {
    out << '!';
  }
  out << l.node();
}

bool valid_bus_name(std::string_view name)
{
  if (name.empty() || name.front() == '#') {
    return false;
  }
  for (char c : name) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '#') {
      return false;
    }
  }
  return true;
}

std::vector<std::string_view> split(std::string_view s)
{
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) {
      ++i;
    }
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') {
      ++i;
    }
    if (i > start) {
      tokens.push_back(s.substr(start, i - start));
    }
  }
  return tokens;
}

std::uint64_t parse_number(std::string_view tok, std::size_t line, const char* what)
{
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw XaigError(line, std::string("expected ") + what + ", got '" + std::string(tok) + "'");
  }
  return v;
}

Literal parse_literal(std::string_view tok, std::size_t line, std::uint64_t limit)
{
  bool neg = false;
  if (!tok.empty() && tok.front() == '!') {
    neg = true;
    tok.remove_prefix(1);
  }
  const std::uint64_t id = parse_number(tok, line, "literal");
  if (id >= limit) {
    throw XaigError(line, "literal references node " + std::to_string(id) + " out of range");
  }
  return Literal{static_cast<NodeId>(id), neg};
}

}  // namespace

void write_xaig(const Circuit& circuit, std::ostream& out)
{
  out << "xaig " << circuit.size() << ' ' << circuit.num_inputs() << '\n';
  for (NodeId i = 0; i < circuit.size(); ++i) {
    const Node& n = circuit.node(i);
    if (!n.is_gate()) {
      continue;
    }
    out << i << (n.kind == NodeKind::And ? " AND " : " XOR ");
    put_literal(out, n.fanin0);
    out << ' ';
    put_literal(out, n.fanin1);
    out << '\n';
  }
  for (const OutputBus& bus : circuit.buses()) {
    if (!valid_bus_name(bus.name)) {
      throw std::invalid_argument("bus name '" + bus.name + "' cannot be written as xaig");
    }
    out << "bus " << bus.name << ' ' << bus.bits.size();
    for (Literal l : bus.bits) {
      out << ' ';
      put_literal(out, l);
    }
    out << '\n';
  }
}

Circuit read_xaig(std::istream& in)
{
  CircuitBuilder builder{BuildOptions{.simplify_same_operand = false}};
  std::string raw;
  std::size_t line = 0;
  bool have_header = false;
  bool in_buses = false;
  std::uint64_t num_nodes = 0;

  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    const auto tok = split(text);
    if (tok.empty()) {
      continue;
    }

    if (!have_header) {
      if (tok[0] != "xaig") {
        throw XaigError(line, "unsupported format or version '" + std::string(tok[0]) +
                                  "', expected 'xaig'");
      }
      if (tok.size() != 3) {
        throw XaigError(line, "header must be 'xaig <num_nodes> <num_inputs>'");
      }
      num_nodes = parse_number(tok[1], line, "node count");
      const std::uint64_t num_inputs = parse_number(tok[2], line, "input count");
      if (num_nodes < num_inputs + 1) {
        throw XaigError(line, "node count smaller than inputs plus constant");
      }
      for (std::uint64_t k = 0; k < num_inputs; ++k) {
        builder.add_input();
      }
      have_header = true;
      continue;
    }

    if (tok[0] == "bus") {
      if (builder.size() != num_nodes) {
        throw XaigError(line, "bus declared before all " + std::to_string(num_nodes) +
                                  " nodes were defined");
      }
      in_buses = true;
      if (tok.size() < 3) {
        throw XaigError(line, "bus line must be 'bus <name> <width> <lit>...'");
      }
      const std::uint64_t width = parse_number(tok[2], line, "bus width");
      if (tok.size() != 3 + width) {
        throw XaigError(line, "bus '" + std::string(tok[1]) + "' declares width " +
                                  std::to_string(width) + " but lists " +
                                  std::to_string(tok.size() - 3) + " literals");
      }
      std::vector<Literal> bits;
      bits.reserve(width);
      for (std::size_t k = 3; k < tok.size(); ++k) {
        bits.push_back(parse_literal(tok[k], line, num_nodes));
      }
      builder.add_bus(std::string(tok[1]), std::move(bits));
      continue;
    }

    if (in_buses) {
      throw XaigError(line, "gate definition after bus declarations");
    }
    if (tok.size() != 4) {
      throw XaigError(line, "gate line must be '<id> AND|XOR <lit> <lit>'");
    }
    const std::uint64_t id = parse_number(tok[0], line, "node id");
    if (id != builder.size()) {
      throw XaigError(line, "expected node id " + std::to_string(builder.size()) + ", got " +
                                std::to_string(id));
    }
    if (id >= num_nodes) {
      throw XaigError(line, "more gates than the header declares");
    }
    NodeKind kind;
    if (tok[1] == "AND") {
      kind = NodeKind::And;
    } else if (tok[1] == "XOR") {
      kind = NodeKind::Xor;
    } else {
      throw XaigError(line, "unknown gate type '" + std::string(tok[1]) + "'");
    }
    const Literal a = parse_literal(tok[2], line, id);
    const Literal b = parse_literal(tok[3], line, id);
    if (a.is_constant() || b.is_constant()) {
      throw XaigError(line, "gate has a constant fanin");
    }
    builder.add_gate_raw(kind, a, b);
  }

  if (!have_header) {
    throw XaigError(0, "empty input, missing 'xaig' header");
  }
  if (builder.size() != num_nodes) {
    throw XaigError(0, "header declares " + std::to_string(num_nodes) + " nodes but " +
                           std::to_string(builder.size()) + " were defined");
  }
  return std::move(builder).freeze();
}

std::string to_xaig_string(const Circuit& circuit)
{
  std::ostringstream os;
  write_xaig(circuit, os);
  return os.str();
}

Circuit from_xaig_string(const std::string& text)
{
  std::istringstream is(text);
  return read_xaig(is);
}

void save_xaig(const Circuit& circuit, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  write_xaig(circuit, out);
  if (!out) {
    throw std::runtime_error("failed writing " + path.string());
  }
}

Circuit load_xaig(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return read_xaig(in);
}

}  // namespace cfsim
