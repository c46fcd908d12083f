// Loading and validation of scenario documents (YAML, format_version 1).
#include <yaml-cpp/yaml.h>

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "crashrepro/scenario.hpp"
#include "yaml_support.hpp"

namespace crashrepro {

namespace {

using detail::location_of;
using detail::require_scalar;

enum class TokenKind { identifier, field, integer, boolean, string, op, lparen, rparen, comma, conj, end };

struct Token {
  TokenKind kind;
  std::string text;
  std::int64_t number = 0;
};

class Lexer {
 public:
  Lexer(std::string_view text, std::string location) : text_(text), location_(std::move(location)) {}

  std::vector<Token> tokens() {
    std::vector<Token> out;
    for (;;) {
      Token t = next();
      out.push_back(t);
      if (t.kind == TokenKind::end) return out;
    }
  }

 private:
  [[noreturn]] void fail(const std::string& reason) const { throw ScenarioParseError(location_, reason + " in '" + std::string(text_) + "'"); }

  Token next() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ >= text_.size()) return {TokenKind::end, ""};
    const char c = text_[pos_];
    auto starts = [&](std::string_view s) { return text_.substr(pos_, s.size()) == s; };
    for (std::string_view op : {"<=", ">=", "!=", "==", "\xE2\x89\xA0", "\xE2\x89\xA4", "\xE2\x89\xA5"}) {
      if (starts(op)) {
        pos_ += op.size();
        std::string norm(op);
        if (op == "==") norm = "=";
        if (op == "\xE2\x89\xA0") norm = "!=";
        if (op == "\xE2\x89\xA4") norm = "<=";
        if (op == "\xE2\x89\xA5") norm = ">=";
        return {TokenKind::op, norm};
      }
    }
    if (starts("&&")) {
      pos_ += 2;
      return {TokenKind::conj, "and"};
    }
    if (c == '=' || c == '<' || c == '>') {
      ++pos_;
      return {TokenKind::op, std::string(1, c)};
    }
    if (c == '(') return ++pos_, Token{TokenKind::lparen, "("};
    if (c == ')') return ++pos_, Token{TokenKind::rparen, ")"};
    if (c == ',') return ++pos_, Token{TokenKind::comma, ","};
    if (c == '"' || c == '\'') {
      std::size_t close = text_.find(c, pos_ + 1);
      if (close == std::string_view::npos) fail("unterminated string literal");
      Token t{TokenKind::string, std::string(text_.substr(pos_ + 1, close - pos_ - 1))};
      pos_ = close + 1;
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '-' && pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
      std::size_t start = pos_++;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      std::string digits(text_.substr(start, pos_ - start));
      try {
        return {TokenKind::integer, digits, std::stoll(digits)};
      } catch (const std::exception&) {
        fail("integer literal out of range");
      }
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      auto ident_char = [&](char ch) { return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_'; };
      while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
      std::string word(text_.substr(start, pos_ - start));
      if (word == "this" && pos_ < text_.size() && text_[pos_] == '.') {
        std::size_t field_start = ++pos_;
        while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
        if (pos_ == field_start) fail("expected field name after 'this.'");
        return {TokenKind::field, std::string(text_.substr(field_start, pos_ - field_start))};
      }
      if (word == "and") return {TokenKind::conj, word};
      if (word == "true" || word == "false") return {TokenKind::boolean, word, word == "true" ? 1 : 0};
      return {TokenKind::identifier, word};
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  std::string location_;
  std::size_t pos_ = 0;
};

// Resolution context for expressions inside one routine body.
struct BodyContext {
  const Api& api;
  const Signature& routine;
  std::string location;

  [[noreturn]] void semantic(const std::string& reason) const { throw ScenarioSemanticError(location, reason); }
};

// An operand before string literals are matched against a domain.
struct RawOperand {
  Token token;
  std::optional<std::size_t> domain;  // domain of a parameter operand
};

RawOperand raw_operand(const Token& t, const BodyContext& ctx) {
  switch (t.kind) {
    case TokenKind::identifier: {
      for (std::size_t i = 0; i < ctx.routine.params.size(); ++i) {
        if (ctx.routine.params[i].name == t.text) return {t, ctx.routine.params[i].domain};
      }
      ctx.semantic("'" + t.text + "' is not a parameter of routine '" + ctx.routine.name + "'");
    }
    case TokenKind::field:
    case TokenKind::integer:
    case TokenKind::boolean:
    case TokenKind::string:
      return {t, std::nullopt};
    default:
      throw ScenarioParseError(ctx.location, "expected an operand, found '" + t.text + "'");
  }
}

Operand resolve(const RawOperand& raw, std::optional<std::size_t> peer_domain, const BodyContext& ctx) {
  const Token& t = raw.token;
  switch (t.kind) {
    case TokenKind::identifier:
      for (std::size_t i = 0; i < ctx.routine.params.size(); ++i) {
        if (ctx.routine.params[i].name == t.text) return {Operand::Kind::param, static_cast<std::int64_t>(i)};
      }
      break;
    case TokenKind::field: {
      if (!ctx.routine.owner) ctx.semantic("free routine '" + ctx.routine.name + "' cannot use 'this." + t.text + "'");
      const auto& fields = ctx.api.types[*ctx.routine.owner].fields;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i].name == t.text) return {Operand::Kind::field, static_cast<std::int64_t>(i)};
      }
      ctx.semantic("unknown field 'this." + t.text + "'");
    }
    case TokenKind::integer:
    case TokenKind::boolean:
      return {Operand::Kind::constant, t.number};
    case TokenKind::string: {
      if (!peer_domain || ctx.api.domains[*peer_domain].kind != DomainKind::enumeration) {
        ctx.semantic("string literal '" + t.text + "' must be compared with an enum parameter");
      }
      const auto& labels = ctx.api.domains[*peer_domain].labels;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == t.text) return {Operand::Kind::constant, static_cast<std::int64_t>(i)};
      }
      ctx.semantic("'" + t.text + "' is not a value of domain '" + ctx.api.domains[*peer_domain].name + "'");
    }
    default:
      break;
  }
  ctx.semantic("cannot resolve operand '" + t.text + "'");
}

Guard parse_guard(const std::string& text, const BodyContext& ctx) {
  auto tokens = Lexer(text, ctx.location).tokens();
  Guard guard;
  std::size_t i = 0;
  auto expect_operand = [&]() {
    if (i >= tokens.size()) throw ScenarioParseError(ctx.location, "truncated guard");
    return raw_operand(tokens[i++], ctx);
  };
  for (;;) {
    RawOperand lhs = expect_operand();
    if (tokens[i].kind != TokenKind::op) throw ScenarioParseError(ctx.location, "expected comparison operator in guard '" + text + "'");
    std::string op = tokens[i++].text;
    RawOperand rhs = expect_operand();
    Comparison cmp;
    // a > b  is  b < a;  a >= b  is  b <= a
    if (op == ">" || op == ">=") {
      std::swap(lhs, rhs);
      op = op == ">" ? "<" : "<=";
    }
    cmp.lhs = resolve(lhs, rhs.domain, ctx);
    cmp.rhs = resolve(rhs, lhs.domain, ctx);
    cmp.op = op == "=" ? CmpOp::eq : op == "!=" ? CmpOp::ne : op == "<" ? CmpOp::lt : CmpOp::le;
    guard.push_back(cmp);
    if (tokens[i].kind == TokenKind::end) return guard;
    if (tokens[i].kind != TokenKind::conj) throw ScenarioParseError(ctx.location, "expected 'and' in guard '" + text + "'");
    ++i;
  }
}

void parse_call(const std::string& text, const BodyContext& ctx, BodyStatement& stmt) {
  auto tokens = Lexer(text, ctx.location).tokens();
  if (tokens.size() < 4 || tokens[0].kind != TokenKind::identifier || tokens[1].kind != TokenKind::lparen) {
    throw ScenarioParseError(ctx.location, "expected '<routine>(<args>)' in '" + text + "'");
  }
  auto callee = ctx.api.find_routine(tokens[0].text);
  if (!callee) ctx.semantic("call to undeclared routine '" + tokens[0].text + "'");
  const Signature& target = ctx.api.routines[*callee];
  if (target.owner && target.owner != ctx.routine.owner) {
    ctx.semantic("routine '" + ctx.routine.name + "' cannot call method '" + target.name + "' of another type");
  }
  std::vector<RawOperand> raw;
  std::size_t i = 2;
  if (tokens[i].kind != TokenKind::rparen) {
    for (;;) {
      raw.push_back(raw_operand(tokens[i++], ctx));
      if (tokens[i].kind == TokenKind::rparen) break;
      if (tokens[i].kind != TokenKind::comma) throw ScenarioParseError(ctx.location, "expected ',' or ')' in '" + text + "'");
      ++i;
    }
  }
  if (tokens[i + 1].kind != TokenKind::end) throw ScenarioParseError(ctx.location, "trailing text in '" + text + "'");
  if (raw.size() != target.params.size()) {
    ctx.semantic("call to '" + target.name + "' passes " + std::to_string(raw.size()) + " arguments, expected " +
                 std::to_string(target.params.size()));
  }
  stmt.callee = *callee;
  for (std::size_t a = 0; a < raw.size(); ++a) stmt.args.push_back(resolve(raw[a], target.params[a].domain, ctx));
}

void parse_set(const std::string& text, const BodyContext& ctx, BodyStatement& stmt) {
  auto tokens = Lexer(text, ctx.location).tokens();
  if (tokens.size() != 4 || tokens[0].kind != TokenKind::field || tokens[1].text != "=") {
    throw ScenarioParseError(ctx.location, "expected 'this.<field> = <operand>' in '" + text + "'");
  }
  Operand field = resolve({tokens[0], std::nullopt}, std::nullopt, ctx);
  stmt.field = static_cast<std::size_t>(field.value);
  stmt.value = resolve(raw_operand(tokens[2], ctx), std::nullopt, ctx);
}

Domain parse_domain(const YAML::Node& node, const std::string& source) {
  Domain d;
  d.name = require_scalar(node, "name", source);
  const std::string kind = require_scalar(node, "kind", source);
  const std::string where = location_of(node, source);
  if (kind == "bool") {
    d.kind = DomainKind::boolean;
    d.values = {0, 1};
  } else if (kind == "int") {
    d.kind = DomainKind::integer;
    if (node["values"]) {
      for (const auto& v : node["values"]) d.values.push_back(v.as<std::int64_t>());
    } else if (node["min"] && node["max"]) {
      auto lo = node["min"].as<std::int64_t>();
      auto hi = node["max"].as<std::int64_t>();
      if (hi < lo) throw ScenarioSemanticError(where, "domain '" + d.name + "' has max < min");
      if (hi - lo >= 1'000'000) throw ScenarioSemanticError(where, "domain '" + d.name + "' is too large");
      for (auto v = lo; v <= hi; ++v) d.values.push_back(v);
    } else {
      throw ScenarioSemanticError(where, "unbounded domain '" + d.name + "': give 'values' or 'min'/'max'");
    }
    std::set<std::int64_t> seen(d.values.begin(), d.values.end());
    if (seen.size() != d.values.size()) throw ScenarioSemanticError(where, "domain '" + d.name + "' repeats a value");
  } else if (kind == "enum") {
    d.kind = DomainKind::enumeration;
    if (!node["values"]) throw ScenarioSemanticError(where, "unbounded domain '" + d.name + "': enum needs 'values'");
    for (const auto& v : node["values"]) {
      d.values.push_back(static_cast<std::int64_t>(d.labels.size()));
      d.labels.push_back(v.as<std::string>());
    }
    std::set<std::string> seen(d.labels.begin(), d.labels.end());
    if (seen.size() != d.labels.size()) throw ScenarioSemanticError(where, "domain '" + d.name + "' repeats a label");
  } else {
    throw ScenarioParseError(where, "unknown domain kind '" + kind + "'");
  }
  if (d.values.empty()) throw ScenarioSemanticError(where, "domain '" + d.name + "' is empty");
  return d;
}

}  // namespace

namespace detail {

std::string location_of(const YAML::Node& node, const std::string& source) {
  const YAML::Mark mark = node.Mark();
  if (mark.is_null()) return source;
  return source + ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1);
}

std::string require_scalar(const YAML::Node& node, const char* key, const std::string& source) {
  const YAML::Node value = node[key];
  if (!value || !value.IsScalar()) throw ScenarioParseError(location_of(node, source), std::string("missing scalar key '") + key + "'");
  return value.as<std::string>();
}

void parse_api_surface(const YAML::Node& root, const std::string& source, const std::string& package,
                       const std::string& module, Api& api) {
  auto unit_of = [&](const std::string& name) { return package.empty() ? name : package + "." + name; };
  if (const YAML::Node domains = root["domains"]) {
    for (const auto& node : domains) {
      Domain d = parse_domain(node, source);
      if (api.find_domain(d.name)) throw ScenarioSemanticError(location_of(node, source), "duplicate domain '" + d.name + "'");
      api.domains.push_back(std::move(d));
    }
  }
  if (const YAML::Node types = root["types"]) {
    for (const auto& node : types) {
      TypeDecl t;
      t.name = require_scalar(node, "name", source);
      if (api.find_type(t.name)) throw ScenarioSemanticError(location_of(node, source), "duplicate type '" + t.name + "'");
      std::set<std::string> names;
      for (const auto& f : node["fields"]) {
        Field field{require_scalar(f, "name", source), f["initial"] ? f["initial"].as<std::int64_t>() : 0};
        if (!names.insert(field.name).second) throw ScenarioSemanticError(location_of(f, source), "duplicate field '" + field.name + "'");
        t.fields.push_back(std::move(field));
      }
      api.types.push_back(std::move(t));
    }
  }
  const YAML::Node routines = root["routines"];
  if (!routines || !routines.IsSequence()) throw ScenarioParseError(location_of(root, source), "missing 'routines' list");
  for (const auto& node : routines) {
    Signature sig;
    sig.name = require_scalar(node, "name", source);
    const std::string where = location_of(node, source);
    if (api.find_routine(sig.name)) throw ScenarioSemanticError(where, "duplicate routine '" + sig.name + "'");
    std::string owner_name = module;
    if (node["owner"]) {
      owner_name = node["owner"].as<std::string>();
      sig.owner = api.find_type(owner_name);
      if (!sig.owner) throw ScenarioSemanticError(where, "unknown owner type '" + owner_name + "'");
    }
    sig.unit_path = unit_of(owner_name);
    sig.file = owner_name + ".java";
    std::set<std::string> names;
    for (const auto& p : node["params"]) {
      const std::string pname = require_scalar(p, "name", source);
      const std::string dname = require_scalar(p, "domain", source);
      auto domain = api.find_domain(dname);
      if (!domain) throw ScenarioSemanticError(location_of(p, source), "unknown domain '" + dname + "'");
      if (!names.insert(pname).second) throw ScenarioSemanticError(location_of(p, source), "duplicate parameter '" + pname + "'");
      sig.params.push_back({pname, *domain});
    }
    api.routines.push_back(std::move(sig));
  }
}

}  // namespace detail

Scenario parse_scenario(std::string_view text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ScenarioParseError(source + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1), e.msg);
  }
  if (!root.IsMap()) throw ScenarioParseError(source, "document must be a mapping");

  try {
    if (detail::require_scalar(root, "format_version", source) != "1") {
      throw ScenarioParseError(location_of(root["format_version"], source), "unsupported format_version");
    }
    Scenario sc;
    sc.name = detail::require_scalar(root, "name", source);
    sc.package = root["package"] ? root["package"].as<std::string>() : std::string("scenario");
    const std::string module = root["module"] ? root["module"].as<std::string>() : std::string("Functions");
    detail::parse_api_surface(root, source, sc.package, module, sc.api);

    sc.case_info.id = sc.name;
    if (const YAML::Node c = root["case"]) {
      if (c["id"]) sc.case_info.id = c["id"].as<std::string>();
      if (c["target_frame"]) sc.case_info.target_frame = c["target_frame"].as<int>();
      if (c["oracle_max_calls"]) sc.case_info.oracle_max_calls = c["oracle_max_calls"].as<int>();
      if (c["minimal_calls"]) sc.case_info.minimal_calls = c["minimal_calls"].as<int>();
      if (c["difficulty"]) sc.case_info.difficulty = c["difficulty"].as<std::string>();
      if (sc.case_info.target_frame < 1 || sc.case_info.oracle_max_calls < 1) {
        throw ScenarioSemanticError(location_of(c, source), "target_frame and oracle_max_calls must be >= 1");
      }
    }

    std::map<std::string, std::set<int>> lines_per_file;
    const YAML::Node routines = root["routines"];
    for (std::size_t r = 0; r < sc.api.routines.size(); ++r) {
      const YAML::Node node = routines[r];
      const Signature& sig = sc.api.routines[r];
      std::vector<BodyStatement> body;
      int previous_line = 0;
      for (const auto& s : node["body"]) {
        BodyContext ctx{sc.api, sig, location_of(s, source)};
        BodyStatement stmt;
        if (!s["line"]) throw ScenarioParseError(ctx.location, "statement needs a 'line'");
        stmt.line = s["line"].as<int>();
        if (stmt.line < 1) ctx.semantic("line numbers must be >= 1");
        if (stmt.line <= previous_line) ctx.semantic("line numbers must strictly increase within routine '" + sig.name + "'");
        if (!lines_per_file[sig.file].insert(stmt.line).second) {
          ctx.semantic("line " + std::to_string(stmt.line) + " is used twice in " + sig.file);
        }
        previous_line = stmt.line;
        int actions = 0;
        if (s["throw"]) {
          ++actions;
          stmt.kind = BodyStatement::Kind::throw_exception;
          stmt.exception_type = s["throw"].as<std::string>();
          if (stmt.exception_type.empty() || stmt.exception_type.find_first_of(" \t:") != std::string::npos) {
            ctx.semantic("exception type must be a dotted identifier");
          }
        }
        if (s["call"]) {
          ++actions;
          stmt.kind = BodyStatement::Kind::call;
          parse_call(s["call"].as<std::string>(), ctx, stmt);
        }
        if (s["set"]) {
          ++actions;
          stmt.kind = BodyStatement::Kind::set_field;
          parse_set(s["set"].as<std::string>(), ctx, stmt);
        }
        if (s["return"]) {
          ++actions;
          stmt.kind = BodyStatement::Kind::return_now;
        }
        if (actions != 1) throw ScenarioParseError(ctx.location, "statement needs exactly one of throw/call/set/return");
        if (s["if"]) stmt.guard = parse_guard(s["if"].as<std::string>(), ctx);
        body.push_back(std::move(stmt));
      }
      if (body.size() > kMaxBodyStatements) {
        throw ScenarioSemanticError(location_of(node, source), "routine '" + sig.name + "' has more than 32 statements");
      }
      sc.bodies.push_back(std::move(body));
    }

    std::size_t offset = 0;
    for (const auto& body : sc.bodies) {
      sc.probe_offset.push_back(offset);
      offset += body.size();
    }
    sc.probe_count = offset;
    return sc;
  } catch (const YAML::Exception& e) {
    throw ScenarioParseError(source + ":" + std::to_string(e.mark.line + 1), e.msg);
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioParseError(path.string(), "cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path.string());
}

}  // namespace crashrepro
