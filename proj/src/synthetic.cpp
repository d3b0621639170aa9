// SPDX-License-Identifier: Apache-2.0
//
// Toy multilingual corpus. Each language renders the same latent function
// (an operation over one or two named operands) with its own keywords,
// delimiters and identifier case; the doc string is shared across languages.
#include <array>
#include <string>
#include <vector>

#include "advf/corpus.hpp"
#include "advf/error.hpp"
#include "advf/rng.hpp"

namespace advf {
namespace {

constexpr std::size_t kStyles = 6;

enum Lang { kPy, kJs, kRb, kGo, kJava, kPhp };

struct Style {
  const char* tag;
  bool camel;
};

constexpr std::array<Style, kStyles> kStyle{{
    {"pyish", false},
    {"jsish", true},
    {"rbish", false},
    {"goish", true},
    {"javaish", true},
    {"phpish", true},
}};

struct Op {
  std::vector<const char*> verb;  // name words
  const char* doc;                // {0}, {1} are operand names
  bool collection;                // first operand is a collection
  int arity;
  std::array<const char*, kStyles> expr;
};

const std::vector<Op>& ops() {
  static const std::vector<Op> k{
      {{"add"}, "return the sum of {0} and {1}", false, 2,
       {"{0} + {1}", "{0} + {1}", "{0} + {1}", "{0} + {1}", "{0} + {1}", "{0} + {1}"}},
      {{"subtract"}, "return the difference of {0} and {1}", false, 2,
       {"{0} - {1}", "{0} - {1}", "{0} - {1}", "{0} - {1}", "{0} - {1}", "{0} - {1}"}},
      {{"multiply"}, "return the product of {0} and {1}", false, 2,
       {"{0} * {1}", "{0} * {1}", "{0} * {1}", "{0} * {1}", "{0} * {1}", "{0} * {1}"}},
      {{"divide"}, "return the quotient of {0} and {1}", false, 2,
       {"{0} / {1}", "{0} / {1}", "{0} / {1}", "{0} / {1}", "{0} / {1}", "{0} / {1}"}},
      {{"max"}, "return the larger of {0} and {1}", false, 2,
       {"max({0}, {1})", "Math.max({0}, {1})", "[{0}, {1}].max", "max({0}, {1})",
        "Math.max({0}, {1})", "max({0}, {1})"}},
      {{"min"}, "return the smaller of {0} and {1}", false, 2,
       {"min({0}, {1})", "Math.min({0}, {1})", "[{0}, {1}].min", "min({0}, {1})",
        "Math.min({0}, {1})", "min({0}, {1})"}},
      {{"average"}, "return the average of {0} and {1}", false, 2,
       {"({0} + {1}) / 2", "({0} + {1}) / 2", "({0} + {1}) / 2", "({0} + {1}) / 2",
        "({0} + {1}) / 2", "({0} + {1}) / 2"}},
      {{"is", "equal"}, "check whether {0} equals {1}", false, 2,
       {"{0} == {1}", "{0} === {1}", "{0} == {1}", "{0} == {1}", "{0}.equals({1})",
        "{0} === {1}"}},
      {{"square"}, "return the square of {0}", false, 1,
       {"{0} * {0}", "{0} * {0}", "{0} * {0}", "{0} * {0}", "{0} * {0}", "{0} * {0}"}},
      {{"negate"}, "return the negation of {0}", false, 1,
       {"-{0}", "-{0}", "-{0}", "-{0}", "-{0}", "-{0}"}},
      {{"double"}, "return twice the {0}", false, 1,
       {"{0} * 2", "{0} * 2", "{0} * 2", "{0} * 2", "{0} * 2", "{0} * 2"}},
      {{"increment"}, "return the {0} plus one", false, 1,
       {"{0} + 1", "{0} + 1", "{0} + 1", "{0} + 1", "{0} + 1", "{0} + 1"}},
      {{"count"}, "return the number of {0}", true, 1,
       {"len({0})", "{0}.length", "{0}.size", "len({0})", "{0}.size()", "count({0})"}},
      {{"is", "empty"}, "check whether the {0} are empty", true, 1,
       {"len({0}) == 0", "{0}.length === 0", "{0}.empty?", "len({0}) == 0", "{0}.isEmpty()",
        "empty({0})"}},
      {{"get", "first"}, "return the first of the {0}", true, 1,
       {"{0}[0]", "{0}[0]", "{0}.first", "{0}[0]", "{0}.get(0)", "{0}[0]"}},
      {{"contains"}, "check whether the {0} contain {1}", true, 2,
       {"{1} in {0}", "{0}.includes({1})", "{0}.include?({1})", "contains({0}, {1})",
        "{0}.contains({1})", "in_array({1}, {0})"}},
  };
  return k;
}

const std::vector<const char*> kScalars{"price", "total",  "score",  "width",  "height",
                                        "weight", "speed", "amount", "offset", "limit",
                                        "balance", "rating", "margin", "depth"};
const std::vector<const char*> kCollections{"items", "values", "names", "users",
                                            "orders", "nodes", "tokens", "rows"};

std::string fill(std::string tmpl, const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string key = "{" + std::to_string(i) + "}";
    for (auto p = tmpl.find(key); p != std::string::npos; p = tmpl.find(key, p + args[i].size()))
      tmpl.replace(p, key.size(), args[i]);
  }
  return tmpl;
}

std::string make_name(const std::vector<std::string>& words, bool camel) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::string w = words[i];
    if (camel && i > 0) w[0] = static_cast<char>(w[0] - 'a' + 'A');
    if (!camel && i > 0) out += '_';
    out += w;
  }
  return out;
}

std::string render(std::size_t style, const std::string& name, const std::vector<std::string>& ps,
                   const std::string& expr) {
  std::string params;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i) params += ", ";
    switch (style) {
      case kGo: params += ps[i] + " int"; break;
      case kJava: params += "int " + ps[i]; break;
      default: params += ps[i]; break;
    }
  }
  switch (style) {
    case kPy: return "def " + name + "(" + params + "):\n    return " + expr + "\n";
    case kJs: return "function " + name + "(" + params + ") {\n  return " + expr + ";\n}\n";
    case kRb: return "def " + name + "(" + params + ")\n  " + expr + "\nend\n";
    case kGo: return "func " + name + "(" + params + ") int {\n\treturn " + expr + "\n}\n";
    case kJava:
      return "public int " + name + "(" + params + ") {\n    return " + expr + ";\n}\n";
    default: return "function " + name + "(" + params + ") {\n    return " + expr + ";\n}\n";
  }
}

}  // namespace

std::vector<std::string> synthetic_language_tags(std::size_t n_langs) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n_langs; ++i) {
    std::string tag = kStyle[i % kStyles].tag;
    if (i >= kStyles) tag += std::to_string(i / kStyles + 1);
    out.push_back(tag);
  }
  return out;
}

Corpus gen_synthetic(std::size_t n_langs, std::span<const std::size_t> per_lang_counts,
                     std::uint64_t seed) {
  if (n_langs < 2) throw ConfigError("gen_synthetic needs at least two languages");
  if (per_lang_counts.size() != n_langs)
    throw ConfigError("gen_synthetic: " + std::to_string(per_lang_counts.size()) +
                      " counts for " + std::to_string(n_langs) + " languages");
  const auto tags = synthetic_language_tags(n_langs);
  Corpus c;
  for (std::size_t l = 0; l < n_langs; ++l) {
    const std::size_t style = l % kStyles;
    Rng rng(seed, "synthetic:" + tags[l]);
    for (std::size_t i = 0; i < per_lang_counts[l]; ++i) {
      const auto& op = ops()[rng.below(ops().size())];
      std::vector<std::string> operands;
      operands.push_back(op.collection ? kCollections[rng.below(kCollections.size())]
                                       : kScalars[rng.below(kScalars.size())]);
      if (op.arity == 2) {
        std::string b;
        do {
          b = kScalars[rng.below(kScalars.size())];
        } while (b == operands[0]);
        operands.push_back(b);
      }
      std::vector<std::string> words(op.verb.begin(), op.verb.end());
      words.push_back(operands[0]);
      const auto name = make_name(words, kStyle[style].camel);

      auto vars = operands;
      if (style == kPhp)
        for (auto& v : vars) v = "$" + v;
      const auto expr = fill(op.expr[style], vars);
      c.examples.push_back({tags[l], render(style, name, vars, expr), fill(op.doc, operands), name});
    }
  }
  return c;
}

}  // namespace advf
