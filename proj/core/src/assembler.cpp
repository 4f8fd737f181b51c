#include "mc2a/assembler.hpp"

#include <charconv>
#include <istream>
#include <map>
#include <sstream>

#include "mc2a/error.hpp"

namespace mc2a {

namespace {

const char* const kSrcNames[] = {"off", "data", "rf", "desc"};

bool ends_with(const std::string& s, const char* suffix) {
  const std::string suf(suffix);
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

std::string symbolic(const std::string& name, std::int64_t v) {
  if (name == "cu.mode" && v >= 0 && v <= 3) return to_string(static_cast<CuMode>(v));
  if (name == "su.mh" && v >= 0 && v <= 6) return to_string(static_cast<MhOp>(v));
  if (name.rfind("in", 0) == 0 && ends_with(name, ".src") && v >= 0 && v <= 3) return kSrcNames[v];
  return std::to_string(v);
}

std::int64_t parse_value(const std::string& name, const std::string& text, const std::string& file, int lineno) {
  if (name == "cu.mode") {
    for (int m = 0; m <= 3; ++m) {
      if (text == to_string(static_cast<CuMode>(m))) return m;
    }
  }
  if (name == "su.mh") {
    for (int m = 0; m <= 6; ++m) {
      if (text == to_string(static_cast<MhOp>(m))) return m;
    }
  }
  if (ends_with(name, ".src")) {
    for (int m = 0; m <= 3; ++m) {
      if (text == kSrcNames[m]) return m;
    }
  }
  std::int64_t v = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ParseError(file, lineno, "bad value '" + text + "' for " + name);
  return v;
}

Kind parse_kind(const std::string& word, const std::string& file, int lineno) {
  for (int k = 0; k <= 5; ++k) {
    if (word == to_string(static_cast<Kind>(k))) return static_cast<Kind>(k);
  }
  throw ParseError(file, lineno, "unknown instruction kind '" + word + "'");
}

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

}  // namespace

std::string disassemble(const Instruction& ins, const HwConfig& hw) {
  if (ins.kind == Kind::kNop) {
    encode(ins, hw);  // rejects a nop with live fields
    return "nop";
  }
  std::string out = to_string(ins.kind);
  for (const auto& f : list_fields(ins, hw)) {
    if (f.value == 0) continue;
    out += ' ';
    out += f.name;
    out += '=';
    out += symbolic(f.name, f.value);
  }
  return out;
}

std::string disassemble_program(const HwConfig& hw, const std::vector<Instruction>& code) {
  std::ostringstream os;
  os << ".hw T=" << hw.T << " K=" << hw.K << " S=" << hw.S << " M=" << hw.M << " B=" << hw.B << "\n";
  for (const auto& ins : code) os << disassemble(ins, hw) << "\n";
  return os.str();
}

Instruction assemble_line(const std::string& line, const HwConfig& hw, const std::string& file, int lineno) {
  std::istringstream ls(strip_comment(line));
  std::string word;
  if (!(ls >> word)) throw ParseError(file, lineno, "empty instruction");
  Instruction ins = make_instruction(hw, parse_kind(word, file, lineno));
  std::vector<std::pair<std::string, std::int64_t>> values;
  while (ls >> word) {
    const auto eq = word.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError(file, lineno, "expected field=value, got '" + word + "'");
    std::string name = word.substr(0, eq);
    const std::int64_t v = parse_value(name, word.substr(eq + 1), file, lineno);
    values.emplace_back(std::move(name), v);
  }
  try {
    set_fields(ins, hw, values);
  } catch (const CapacityError& e) {
    throw ParseError(file, lineno, e.what());
  } catch (const InputError& e) {
    throw ParseError(file, lineno, e.what());
  }
  if (ins.kind == Kind::kNop && !(ins == make_instruction(hw))) {
    throw ParseError(file, lineno, "nop takes no fields");
  }
  return ins;
}

std::vector<Instruction> assemble_program(std::istream& is, HwConfig& hw, const std::string& file) {
  std::string line;
  int lineno = 0;
  bool have_hw = false;
  std::vector<Instruction> code;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string body = strip_comment(line);
    std::istringstream ls(body);
    std::string head;
    if (!(ls >> head)) continue;
    if (head == ".hw") {
      if (have_hw) throw ParseError(file, lineno, "duplicate .hw header");
      std::map<std::string, int> kv;
      std::string tok;
      while (ls >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw ParseError(file, lineno, "bad .hw entry '" + tok + "'");
        kv[tok.substr(0, eq)] = static_cast<int>(parse_value(tok.substr(0, eq), tok.substr(eq + 1), file, lineno));
      }
      HwConfig h;
      for (const char* key : {"T", "K", "S", "M", "B"}) {
        if (!kv.count(key)) throw ParseError(file, lineno, std::string(".hw is missing ") + key);
      }
      h.T = kv["T"];
      h.K = kv["K"];
      h.S = kv["S"];
      h.M = kv["M"];
      h.B = kv["B"];
      try {
        h.validate();
      } catch (const InputError& e) {
        throw ParseError(file, lineno, e.what());
      }
      hw = h;
      have_hw = true;
      continue;
    }
    if (!have_hw) throw ParseError(file, lineno, "program must start with a .hw header");
    code.push_back(assemble_line(body, hw, file, lineno));
  }
  if (!have_hw) throw ParseError(file, lineno, "missing .hw header");
  return code;
}

}  // namespace mc2a
