#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crashrepro {

enum class DomainKind { integer, boolean, enumeration };

// A finite value domain. Every value is carried as an int64; enumeration
// values are indices into `labels`, booleans are 0/1.
struct Domain {
  std::string name;
  DomainKind kind = DomainKind::integer;
  std::vector<std::int64_t> values;
  std::vector<std::string> labels;

  std::size_t size() const { return values.size(); }
  bool contains(std::int64_t v) const;
  std::string render(std::int64_t v) const;
  std::optional<std::int64_t> parse(std::string_view text) const;
};

struct Field {
  std::string name;
  std::int64_t initial = 0;
};

struct TypeDecl {
  std::string name;
  std::vector<Field> fields;
};

struct Param {
  std::string name;
  std::size_t domain = 0;
};

struct Signature {
  std::string name;
  std::optional<std::size_t> owner;  // type index; empty for free routines
  std::vector<Param> params;
  std::string unit_path;  // frame unit, e.g. "org.acc.Buffer"
  std::string file;       // frame file, e.g. "Buffer.java"
};

// The invokable surface of a system under test: what genomes may construct,
// which constants they may create, and which routines they may call.
struct Api {
  std::vector<Domain> domains;
  std::vector<TypeDecl> types;
  std::vector<Signature> routines;

  std::optional<std::size_t> find_domain(std::string_view name) const;
  std::optional<std::size_t> find_type(std::string_view name) const;
  std::optional<std::size_t> find_routine(std::string_view name) const;
};

}  // namespace crashrepro
