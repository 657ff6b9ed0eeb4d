#ifndef FUZZDIAG_RULEBOOK_HPP
#define FUZZDIAG_RULEBOOK_HPP

// Concrete variables and rule tables for the four feature modules, the
// severity -> action mapping, and the rule-base text format.
//
// Rule-base file grammar (version 1), one statement per line, `#` starts a
// comment, tokens separated by blanks:
//
//   fuzzdiag-rulebase 1
//   tnorm product|min
//   variable <name> <min> <max> linear|circular
//   term <name> <left> <peak> <right> [left-shoulder] [right-shoulder]
//   ...
//   end
//   (more variable blocks)
//   rule <term of var 1> ... <term of var n> : <a0> [<a1> ... <an>]
//
// All variable blocks precede the rules. Every combination of terms must
// appear in exactly one rule line.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fuzzdiag/errors.hpp"
#include "fuzzdiag/fuzzy.hpp"
#include "fuzzdiag/textio.hpp"

namespace fuzzdiag {

enum class ModuleKind : std::uint8_t { IpCount, IpxCount, Utilization, BytesPerSec };

inline constexpr std::array<ModuleKind, 4> all_modules{ModuleKind::IpCount, ModuleKind::IpxCount,
                                                       ModuleKind::Utilization,
                                                       ModuleKind::BytesPerSec};

inline const char* to_string(ModuleKind k) noexcept {
    switch (k) {
        case ModuleKind::IpCount: return "IpCount";
        case ModuleKind::IpxCount: return "IpxCount";
        case ModuleKind::Utilization: return "Utilization";
        case ModuleKind::BytesPerSec: return "BytesPerSec";
    }
    return "?";
}

inline std::optional<ModuleKind> module_from_string(std::string_view s) {
    for (auto k : all_modules)
        if (s == to_string(k)) return k;
    return std::nullopt;
}

inline std::size_t index_of(ModuleKind k) noexcept { return static_cast<std::size_t>(k); }

/// Escalation levels; the numeric code is the zero-order rule consequent.
enum class ActionLevel : int { Ignore = 0, Log = 1, Email = 2, Sms = 3 };

inline const char* to_string(ActionLevel a) noexcept {
    switch (a) {
        case ActionLevel::Ignore: return "IGNORE";
        case ActionLevel::Log: return "LOG";
        case ActionLevel::Email: return "EMAIL";
        case ActionLevel::Sms: return "SMS";
    }
    return "?";
}

inline std::optional<ActionLevel> action_from_string(std::string_view s) {
    for (int c = 0; c <= 3; ++c)
        if (s == to_string(static_cast<ActionLevel>(c))) return static_cast<ActionLevel>(c);
    return std::nullopt;
}

inline int code(ActionLevel a) noexcept { return static_cast<int>(a); }

/// Bands at the midpoints between action codes; a tie escalates.
inline ActionLevel action_from_severity(double y) {
    if (!std::isfinite(y)) throw ValidationError("severity is not finite");
    if (y < 0.5) return ActionLevel::Ignore;
    if (y < 1.5) return ActionLevel::Log;
    if (y < 2.5) return ActionLevel::Email;
    return ActionLevel::Sms;
}

namespace terms {
inline const std::vector<std::string> intensity{"ExtremeLow", "Low", "Average", "High",
                                                "ExtremeHigh"};
// Sorted by peak hour; MidNight peaks at 0.
inline const std::vector<std::string> time{"MidNight", "AfterMid",  "EarlyMorning", "Morning",
                                           "Afternoon", "Evening", "Night"};
}  // namespace terms

/// Observed/baseline ratio axis; 1.0 is normal traffic.
inline LinguisticVariable default_intensity_variable() {
    return LinguisticVariable::ruspini("intensity", 0.0, 2.0, false, terms::intensity,
                                       {0.0, 0.5, 1.0, 1.5, 2.0});
}

/// Hour of day, wrapping at 24.
inline LinguisticVariable default_time_variable() {
    return LinguisticVariable::ruspini("time", 0.0, 24.0, true, terms::time,
                                       {0.0, 2.5, 6.0, 10.0, 14.0, 18.0, 21.0});
}

/// Initial control rules for packet count vs. time of day, indexed
/// [time term][intensity term] in the order of `terms::time` / `terms::intensity`.
inline const std::array<std::array<ActionLevel, 5>, 7>& initial_rule_table() {
    using enum ActionLevel;
    static const std::array<std::array<ActionLevel, 5>, 7> table{{
        {Sms, Ignore, Log, Sms, Sms},        // MidNight
        {Sms, Ignore, Log, Sms, Sms},        // AfterMid
        {Sms, Ignore, Log, Email, Sms},      // EarlyMorning
        {Sms, Log, Ignore, Ignore, Sms},     // Morning
        {Sms, Ignore, Ignore, Log, Sms},     // Afternoon
        {Sms, Log, Ignore, Ignore, Sms},     // Evening
        {Sms, Ignore, Log, Email, Sms},      // Night
    }};
    return table;
}

/// Two-input rule base (intensity, time) with zero-order consequents taken
/// from the initial table. The same table seeds every module; operators
/// replace per-module tables through rule-base files.
inline RuleBase build_rulebase(ModuleKind kind, TNorm tnorm = TNorm::Product) {
    (void)kind;
    const auto& table = initial_rule_table();
    std::vector<TSRule> rules;
    rules.reserve(35);
    for (std::size_t i = 0; i < terms::intensity.size(); ++i)
        for (std::size_t t = 0; t < terms::time.size(); ++t)
            rules.push_back({{i, t}, {static_cast<double>(code(table[t][i]))}});
    return RuleBase({default_intensity_variable(), default_time_variable()}, std::move(rules), tnorm);
}

// ---------------------------------------------------------------------------
// Rule-base file format

inline void write_rulebase(std::ostream& os, const RuleBase& rb) {
    using text::format_double;
    os << "fuzzdiag-rulebase 1\n";
    os << "tnorm " << to_string(rb.tnorm()) << "\n";
    for (const auto& v : rb.variables()) {
        os << "variable " << v.name() << ' ' << format_double(v.domain_min()) << ' '
           << format_double(v.domain_max()) << ' ' << (v.circular() ? "circular" : "linear") << "\n";
        for (const auto& t : v.terms()) {
            os << "term " << t.name << ' ' << format_double(t.mf.left) << ' '
               << format_double(t.mf.peak) << ' ' << format_double(t.mf.right);
            if (t.mf.left_shoulder) os << " left-shoulder";
            if (t.mf.right_shoulder) os << " right-shoulder";
            os << "\n";
        }
        os << "end\n";
    }
    for (const auto& r : rb.rules()) {
        os << "rule";
        for (std::size_t p = 0; p < r.terms.size(); ++p)
            os << ' ' << rb.variables()[p].terms()[r.terms[p]].name;
        os << " :";
        for (double a : r.coeffs) os << ' ' << format_double(a);
        os << "\n";
    }
}

inline RuleBase read_rulebase(std::istream& is) {
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    std::optional<TNorm> tnorm;
    std::vector<LinguisticVariable> vars;
    std::vector<TSRule> rules;

    struct Pending {
        std::string name;
        double min, max;
        bool circular;
        std::vector<Term> terms;
        std::size_t line;
    };
    std::optional<Pending> open;

    while (std::getline(is, line)) {
        ++lineno;
        const auto tok = text::tokens(line);
        if (tok.empty()) continue;
        const auto kw = tok[0];
        if (!header) {
            if (kw != "fuzzdiag-rulebase" || tok.size() != 2)
                throw ParseError(lineno, "expected 'fuzzdiag-rulebase 1' header");
            if (tok[1] != "1") throw ParseError(lineno, "unsupported rule-base version " + std::string(tok[1]));
            header = true;
            continue;
        }
        if (open) {
            if (kw == "term") {
                if (tok.size() < 5 || tok.size() > 7)
                    throw ParseError(lineno, "term needs: name left peak right [left-shoulder] [right-shoulder]");
                Term t{std::string(tok[1]),
                       {text::parse_double(tok[2], lineno), text::parse_double(tok[3], lineno),
                        text::parse_double(tok[4], lineno)}};
                for (std::size_t k = 5; k < tok.size(); ++k) {
                    if (tok[k] == "left-shoulder" && !t.mf.left_shoulder)
                        t.mf.left_shoulder = true;
                    else if (tok[k] == "right-shoulder" && !t.mf.right_shoulder)
                        t.mf.right_shoulder = true;
                    else
                        throw ParseError(lineno, "unexpected term flag '" + std::string(tok[k]) + "'");
                }
                open->terms.push_back(std::move(t));
            } else if (kw == "end" && tok.size() == 1) {
                try {
                    vars.emplace_back(open->name, open->min, open->max, open->circular,
                                      std::move(open->terms));
                } catch (const ValidationError& e) {
                    throw ValidationError("line " + std::to_string(open->line) + ": " + e.what());
                }
                open.reset();
            } else {
                throw ParseError(lineno, "expected 'term' or 'end' inside variable block");
            }
            continue;
        }
        if (kw == "tnorm") {
            if (tok.size() != 2 || tnorm) throw ParseError(lineno, "expected a single 'tnorm product|min'");
            if (tok[1] == "product")
                tnorm = TNorm::Product;
            else if (tok[1] == "min")
                tnorm = TNorm::Min;
            else
                throw ParseError(lineno, "unknown t-norm '" + std::string(tok[1]) + "'");
        } else if (kw == "variable") {
            if (!rules.empty()) throw ParseError(lineno, "variables must precede rules");
            if (tok.size() != 5) throw ParseError(lineno, "variable needs: name min max linear|circular");
            bool circular = false;
            if (tok[4] == "circular")
                circular = true;
            else if (tok[4] != "linear")
                throw ParseError(lineno, "expected 'linear' or 'circular'");
            open = Pending{std::string(tok[1]), text::parse_double(tok[2], lineno),
                           text::parse_double(tok[3], lineno), circular, {}, lineno};
        } else if (kw == "rule") {
            if (vars.empty()) throw ParseError(lineno, "rule before any variable");
            const std::size_t n = vars.size();
            if (tok.size() < n + 3 || tok[n + 1] != ":")
                throw ParseError(lineno, "rule needs " + std::to_string(n) + " terms, ':' and coefficients");
            TSRule r;
            for (std::size_t p = 0; p < n; ++p) {
                auto idx = vars[p].find_term(tok[p + 1]);
                if (!idx)
                    throw ParseError(lineno, "unknown term '" + std::string(tok[p + 1]) +
                                                 "' for variable " + vars[p].name());
                r.terms.push_back(*idx);
            }
            for (std::size_t k = n + 2; k < tok.size(); ++k)
                r.coeffs.push_back(text::parse_double(tok[k], lineno));
            rules.push_back(std::move(r));
        } else {
            throw ParseError(lineno, "unknown statement '" + std::string(kw) + "'");
        }
    }
    if (!header) throw ParseError(lineno, "empty rule-base file");
    if (open) throw ParseError(lineno, "unterminated variable block " + open->name);
    return RuleBase(std::move(vars), std::move(rules), tnorm.value_or(TNorm::Product));
}

inline void save_rulebase(const RuleBase& rb, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write rule base " + path);
    write_rulebase(os, rb);
    if (!os.flush()) throw Error("write failed for rule base " + path);
}

inline RuleBase load_rulebase(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot read rule base " + path);
    return read_rulebase(is);
}

}  // namespace fuzzdiag

#endif  // FUZZDIAG_RULEBOOK_HPP
