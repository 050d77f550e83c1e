#include "pathnewton/io.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace pathnewton {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Token {
  std::string text;
  int column = 0;
};

std::vector<Token> tokenize(const std::string& line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    if (line[i] == '#') break;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
           line[i] != '#')
      ++i;
    out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

class InstanceParser {
public:
  explicit InstanceParser(const std::string& text) : in_(text) {}

  NetworkInstance parse() {
    expect_header();
    expect_paths_count();
    bool saw_end = false;
    while (next_record()) {
      const std::string& head = tokens_[0].text;
      if (head == "path") on_path();
      else if (head == "block") on_block();
      else if (head == "arc") on_arc();
      else if (head == "entry") on_entry();
      else if (head == "constraint") on_constraint();
      else if (head == "end") {
        require_count(1);
        saw_end = true;
        if (next_record())
          fail(tokens_[0].column, "content after 'end'");
        break;
      } else {
        fail(tokens_[0].column, "unknown record '" + head + "'");
      }
    }
    if (!saw_end) fail_line("missing 'end'");
    if (static_cast<int>(inst_.path_costs.size()) != inst_.num_paths)
      fail_line("expected " + std::to_string(inst_.num_paths) + " path records, got " +
                std::to_string(inst_.path_costs.size()));
    finalize();
    return std::move(inst_);
  }

private:
  [[noreturn]] void fail(int column, const std::string& what) {
    throw ParseError(line_no_, column, what);
  }
  [[noreturn]] void fail_line(const std::string& what) {
    throw ParseError(line_no_, 0, what);
  }

  bool next_record() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      tokens_ = tokenize(line);
      if (!tokens_.empty()) return true;
    }
    return false;
  }

  void require_count(int n) {
    if (static_cast<int>(tokens_.size()) != n)
      fail(tokens_.back().column,
           "expected " + std::to_string(n) + " tokens in a '" + tokens_[0].text +
               "' record, got " + std::to_string(tokens_.size()));
  }

  const Token& tok(int i) const { return tokens_[static_cast<std::size_t>(i)]; }

  double real_at(int i) {
    const Token& t = tok(i);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(t.text.c_str(), &end);
    if (end != t.text.c_str() + t.text.size() || t.text.empty() || errno == ERANGE)
      fail(t.column, "'" + t.text + "' is not a real number");
    return v;
  }

  int int_at(int i) {
    const Token& t = tok(i);
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(t.text.c_str(), &end, 10);
    if (end != t.text.c_str() + t.text.size() || t.text.empty() || errno == ERANGE)
      fail(t.column, "'" + t.text + "' is not an integer");
    return static_cast<int>(v);
  }

  void expect_header() {
    if (!next_record()) fail_line("empty document");
    if (tokens_.size() != 2 || tok(0).text != "pathnet-instance" || tok(1).text != "v1")
      fail(tok(0).column, "expected header 'pathnet-instance v1'");
  }

  void expect_paths_count() {
    if (!next_record()) fail_line("expected 'paths <P>'");
    if (tok(0).text != "paths") fail(tok(0).column, "expected 'paths <P>'");
    require_count(2);
    inst_.num_paths = int_at(1);
    if (inst_.num_paths <= 0) fail(tok(1).column, "paths count must be positive");
  }

  // Key=value pairs after a fixed prefix; insertion order preserved.
  std::vector<std::pair<Token, std::string>> keyed_tail(int first) {
    std::vector<std::pair<Token, std::string>> out;
    for (int i = first; i < static_cast<int>(tokens_.size()); ++i) {
      const Token& t = tok(i);
      const std::size_t eq = t.text.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == t.text.size())
        fail(t.column, "expected key=value, got '" + t.text + "'");
      Token key{t.text.substr(0, eq), t.column};
      out.emplace_back(key, t.text.substr(eq + 1));
    }
    return out;
  }

  double take_param(std::vector<std::pair<Token, std::string>>& kv,
                    const std::string& key, const Token& kind_tok) {
    for (auto it = kv.begin(); it != kv.end(); ++it) {
      if (it->first.text == key) {
        Token value_tok{it->second, it->first.column};
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(it->second.c_str(), &end);
        if (end != it->second.c_str() + it->second.size() || it->second.empty() ||
            errno == ERANGE)
          fail(it->first.column, "'" + it->second + "' is not a real number");
        kv.erase(it);
        return v;
      }
    }
    fail(kind_tok.column, kind_tok.text + " needs parameter '" + key + "'");
  }

  ScalarCostFn parse_cost(int kind_index,
                          std::vector<std::pair<Token, std::string>>& kv) {
    const Token& kt = tok(kind_index);
    ScalarCostFn fn;
    if (kt.text == "Zero") {
      fn = ScalarCostFn::zero();
    } else if (kt.text == "Quadratic") {
      const double q = take_param(kv, "q", kt);
      const double t = take_param(kv, "t", kt);
      const double l = take_param(kv, "l", kt);
      fn = ScalarCostFn{CostKind::Quadratic, q, t, l, 0.0, 0, 0.0};
    } else if (kt.text == "PowerMonomial") {
      const double c = take_param(kv, "c", kt);
      const double k = take_param(kv, "k", kt);
      fn = ScalarCostFn{CostKind::PowerMonomial, 0.0, 0.0, 0.0, c,
                        static_cast<int>(k), 0.0};
      if (k != static_cast<int>(k)) fail(kt.column, "exponent k must be an integer");
    } else if (kt.text == "KleinrockDelay") {
      const double cap = take_param(kv, "cap", kt);
      fn = ScalarCostFn{CostKind::KleinrockDelay, 0.0, 0.0, 0.0, 0.0, 0, cap};
    } else if (kt.text == "NegPartPenalty") {
      const double c = take_param(kv, "c", kt);
      fn = ScalarCostFn{CostKind::NegPartPenalty, 0.0, 0.0, 0.0, c, 0, 0.0};
    } else {
      fail(kt.column, "unknown cost kind '" + kt.text + "'");
    }
    if (auto reason = invalid_reason(fn)) fail(kt.column, *reason);
    return fn;
  }

  void on_path() {
    if (in_block_) fail(tok(0).column, "'path' record inside a block");
    if (tokens_.size() < 4)
      fail(tok(0).column, "'path' needs <id> <name> <CostKind>");
    const int id = int_at(1);
    if (id != static_cast<int>(inst_.path_costs.size()))
      fail(tok(1).column, "path ids must be sequential; expected " +
                              std::to_string(inst_.path_costs.size()));
    if (id >= inst_.num_paths) fail(tok(1).column, "path id exceeds the paths count");
    auto kv = keyed_tail(4);
    // The optional bound rides in the same key=value tail as cost params.
    bool nonneg = false;
    for (auto it = kv.begin(); it != kv.end(); ++it) {
      if (it->first.text == "lb") {
        if (it->second != "0")
          fail(it->first.column, "only lb=0 is supported");
        nonneg = true;
        kv.erase(it);
        break;
      }
    }
    ScalarCostFn fn = parse_cost(3, kv);
    if (!kv.empty())
      fail(kv.front().first.column, "unknown key '" + kv.front().first.text + "'");
    inst_.path_names.push_back(tok(2).text);
    inst_.path_costs.push_back(fn);
    if (nonneg) inst_.nonneg_paths.push_back(id);
  }

  void on_block() {
    require_count(2);
    inst_.blocks.push_back({});
    inst_.blocks.back().name = tok(1).text;
    in_block_ = true;
  }

  void on_arc() {
    if (!in_block_) fail(tok(0).column, "'arc' record outside any block");
    if (tokens_.size() < 4) fail(tok(0).column, "'arc' needs <id> <name> <CostKind>");
    CouplingBlock& block = inst_.blocks.back();
    const int id = int_at(1);
    if (id != block.num_arcs())
      fail(tok(1).column, "arc ids must be sequential; expected " +
                              std::to_string(block.num_arcs()));
    auto kv = keyed_tail(4);
    ScalarCostFn fn = parse_cost(3, kv);
    if (!kv.empty())
      fail(kv.front().first.column, "unknown key '" + kv.front().first.text + "'");
    block.arc_names.push_back(tok(2).text);
    block.arc_costs.push_back(fn);
  }

  void on_entry() {
    if (!in_block_) fail(tok(0).column, "'entry' record outside any block");
    require_count(4);
    CouplingBlock& block = inst_.blocks.back();
    const int arc = int_at(1);
    if (arc < 0 || arc >= block.num_arcs())
      fail(tok(1).column, "entry references unknown arc id " + tok(1).text);
    const int path = int_at(2);
    if (path < 0 || path >= inst_.num_paths)
      fail(tok(2).column, "entry references unknown path id " + tok(2).text);
    const double weight = real_at(3);
    block.entries.push_back({arc, path, weight});
  }

  void on_constraint() {
    if (tokens_.size() < 4)
      fail(tok(0).column, "'constraint' needs <path>:<coeff> ... rhs <value>");
    std::vector<std::pair<int, double>> row;
    int i = 1;
    for (; i < static_cast<int>(tokens_.size()); ++i) {
      if (tok(i).text == "rhs") break;
      const Token& t = tok(i);
      const std::size_t colon = t.text.find(':');
      if (colon == std::string::npos)
        fail(t.column, "expected <path>:<coeff>, got '" + t.text + "'");
      errno = 0;
      char* end = nullptr;
      const long p = std::strtol(t.text.c_str(), &end, 10);
      if (end != t.text.c_str() + colon)
        fail(t.column, "'" + t.text.substr(0, colon) + "' is not a path id");
      if (p < 0 || p >= inst_.num_paths)
        fail(t.column, "constraint references unknown path id " + std::to_string(p));
      const std::string coeff_text = t.text.substr(colon + 1);
      errno = 0;
      const double c = std::strtod(coeff_text.c_str(), &end);
      if (end != coeff_text.c_str() + coeff_text.size() || coeff_text.empty())
        fail(t.column, "'" + coeff_text + "' is not a real number");
      row.emplace_back(static_cast<int>(p), c);
    }
    if (row.empty()) fail(tok(1).column, "constraint has no coefficients");
    if (i + 1 >= static_cast<int>(tokens_.size()) || tok(i).text != "rhs")
      fail(tokens_.back().column, "constraint is missing 'rhs <value>'");
    const double rhs = real_at(i + 1);
    if (i + 2 != static_cast<int>(tokens_.size()))
      fail(tok(i + 2).column, "content after the rhs value");
    if (!inst_.equalities) inst_.equalities.emplace();
    inst_.equalities->rows.push_back(std::move(row));
    inst_.equalities->rhs.push_back(rhs);
  }

  void finalize() {
    sort_entries(inst_);
    const ValidationReport report = validate(inst_);
    if (!report.ok()) {
      std::string joined = "instance validation failed:";
      for (const std::string& v : report.violations) joined += " " + v + ";";
      joined.pop_back();
      throw ParseError(line_no_, 0, joined);
    }
  }

  std::istringstream in_;
  NetworkInstance inst_;
  std::vector<Token> tokens_;
  int line_no_ = 0;
  bool in_block_ = false;
};

std::string cost_record(const ScalarCostFn& fn) {
  switch (fn.kind) {
    case CostKind::Zero: return "Zero";
    case CostKind::Quadratic:
      return "Quadratic q=" + fmt17(fn.q) + " t=" + fmt17(fn.t) + " l=" + fmt17(fn.l);
    case CostKind::PowerMonomial:
      return "PowerMonomial c=" + fmt17(fn.coeff) + " k=" + std::to_string(fn.exponent);
    case CostKind::KleinrockDelay: return "KleinrockDelay cap=" + fmt17(fn.cap);
    case CostKind::NegPartPenalty: return "NegPartPenalty c=" + fmt17(fn.coeff);
  }
  return "Zero";
}

std::string token_name(const std::string& name, const char* prefix, int id) {
  if (name.empty()) return prefix + std::to_string(id);
  for (char c : name)
    if (std::isspace(static_cast<unsigned char>(c)) || c == '#')
      return prefix + std::to_string(id);
  return name;
}

} // namespace

NetworkInstance parse_instance(const std::string& text) {
  return InstanceParser(text).parse();
}

std::string serialize_instance(const NetworkInstance& instance) {
  NetworkInstance canon = instance;
  sort_entries(canon);
  std::set<int> nonneg(canon.nonneg_paths.begin(), canon.nonneg_paths.end());

  std::string out = "pathnet-instance v1\n";
  out += "paths " + std::to_string(canon.num_paths) + "\n";
  for (int p = 0; p < canon.num_paths; ++p) {
    const std::string name =
        p < static_cast<int>(canon.path_names.size()) ? canon.path_names[p] : "";
    out += "path " + std::to_string(p) + " " + token_name(name, "p", p) + " " +
           cost_record(canon.path_costs[p]);
    if (nonneg.count(p)) out += " lb=0";
    out += "\n";
  }
  for (std::size_t bi = 0; bi < canon.blocks.size(); ++bi) {
    const CouplingBlock& block = canon.blocks[bi];
    out += "block " + token_name(block.name, "b", static_cast<int>(bi)) + "\n";
    for (int a = 0; a < block.num_arcs(); ++a) {
      const std::string name =
          a < static_cast<int>(block.arc_names.size()) ? block.arc_names[a] : "";
      out += "arc " + std::to_string(a) + " " + token_name(name, "a", a) + " " +
             cost_record(block.arc_costs[a]) + "\n";
    }
    for (const CouplingEntry& e : block.entries)
      out += "entry " + std::to_string(e.arc) + " " + std::to_string(e.path) + " " +
             fmt17(e.weight) + "\n";
  }
  if (instance.equalities) {
    for (std::size_t i = 0; i < instance.equalities->rows.size(); ++i) {
      out += "constraint";
      for (const auto& [p, c] : instance.equalities->rows[i])
        out += " " + std::to_string(p) + ":" + fmt17(c);
      out += " rhs " + fmt17(instance.equalities->rhs[i]) + "\n";
    }
  }
  out += "end\n";
  return out;
}

std::vector<double> parse_vector(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    for (const Token& t : tokenize(line)) {
      errno = 0;
      char* end = nullptr;
      const double v = std::strtod(t.text.c_str(), &end);
      if (end != t.text.c_str() + t.text.size() || errno == ERANGE)
        throw ParseError(line_no, t.column, "'" + t.text + "' is not a real number");
      out.push_back(v);
    }
  }
  return out;
}

std::string format_trace(const std::vector<TraceRow>& rows) {
  std::string out =
      "outer_iter,F,grad_inf_norm,cg_iters,cg_termination,stepsize,op_count,"
      "elapsed_seconds\n";
  for (const TraceRow& r : rows) {
    out += std::to_string(r.outer_iter) + ",";
    out += fmt17(r.objective_value) + ",";
    out += fmt17(r.grad_inf_norm) + ",";
    out += std::to_string(r.cg_iters) + ",";
    out += r.cg_termination + ",";
    out += fmt17(r.stepsize) + ",";
    out += std::to_string(r.op_count) + ",";
    out += fmt17(r.elapsed_seconds) + "\n";
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

NetworkInstance load_instance(const std::string& path) {
  try {
    return parse_instance(read_text_file(path));
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

} // namespace pathnewton
