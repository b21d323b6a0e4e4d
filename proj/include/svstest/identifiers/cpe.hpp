#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace svstest::identifiers {

class MalformedCpe : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Logical value of one CPE attribute.
///
/// Literal values are stored with wildcard metacharacters unescaped (`*`, `?`)
/// and literal occurrences of `*`, `?` and `\` escaped with a backslash. Every
/// other character is stored as-is, so `lucene-replicator` and `8.11.4` read
/// naturally. Case is preserved; comparisons ignore it.
class CpeAttribute
{
public:
    enum class Kind { Any, Na, Literal };

    CpeAttribute() = default;

    static CpeAttribute any() { return {}; }
    static CpeAttribute na();
    /// Builds a literal from its stored form. Throws MalformedCpe on empty
    /// values, dangling escapes or wildcards in the middle of the value.
    static CpeAttribute literal(std::string stored);
    /// Builds a literal from a plain string, escaping any metacharacters.
    static CpeAttribute plain(std::string_view text);

    Kind kind() const noexcept { return kind_; }
    bool is_any() const noexcept { return kind_ == Kind::Any; }
    bool is_na() const noexcept { return kind_ == Kind::Na; }
    bool is_literal() const noexcept { return kind_ == Kind::Literal; }

    /// Stored form; empty unless kind() == Literal.
    const std::string& value() const noexcept { return value_; }
    bool has_wildcards() const noexcept;
    /// Literal with escapes removed (wildcards kept as-is).
    std::string unescaped() const;

    bool operator==(const CpeAttribute&) const = default;

private:
    Kind kind_ = Kind::Any;
    std::string value_;
};

enum class CpeField : std::size_t {
    part,
    vendor,
    product,
    version,
    update,
    edition,
    language,
    sw_edition,
    target_sw,
    target_hw,
    other,
};

inline constexpr std::size_t kCpeFieldCount = 11;

std::string_view field_name(CpeField field);

/// CPE 2.3 well-formed name: eleven attributes, `part` restricted to a/o/h.
struct Wfn
{
    std::array<CpeAttribute, kCpeFieldCount> attributes{};

    CpeAttribute& operator[](CpeField f) { return attributes[static_cast<std::size_t>(f)]; }
    const CpeAttribute& operator[](CpeField f) const { return attributes[static_cast<std::size_t>(f)]; }

    bool operator==(const Wfn&) const = default;
};

enum class MatchRelation { Equal, Subset, Superset, Disjoint };

std::string_view to_string(MatchRelation rel);

/// How a component whose version attribute is NA is matched.
enum class NaVersionPolicy {
    TreatNaVersionAsUnknown, ///< NA version compared as ANY; all other attributes strict.
    Strict,                  ///< NA vs literal is DISJOINT, as in the name-matching standard.
};

/// Parses a CPE 2.3 formatted string. Blank and `*` tokens become ANY, `-`
/// becomes NA.
Wfn parse_cpe(std::string_view formatted);

std::string format_cpe(const Wfn& wfn);

/// The 11 raw attribute tokens of a formatted string, escapes kept. Tells a
/// blank token from `*`, which parse_cpe maps to the same value.
std::vector<std::string> cpe_tokens(std::string_view formatted);

/// Set relation of the source attribute to the target attribute.
MatchRelation compare_attribute(const CpeAttribute& source, const CpeAttribute& target);

/// True iff no attribute pair is DISJOINT. The criterion is the source of the
/// comparison, the component the target.
bool cpe_names_match(const Wfn& component, const Wfn& criterion,
                     NaVersionPolicy policy = NaVersionPolicy::TreatNaVersionAsUnknown);

} // namespace svstest::identifiers
