#include "svstest/identifiers/cpe.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

namespace svstest::identifiers {

namespace {

struct Unit
{
    char ch;
    bool meta; // unescaped `*` or `?`
};

char fold(char c)
{
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

std::vector<Unit> units_of_stored(std::string_view stored)
{
    std::vector<Unit> units;
    units.reserve(stored.size());
    for (std::size_t i = 0; i < stored.size(); ++i) {
        const char c = stored[i];
        if (c == '\\') {
            if (i + 1 == stored.size())
                throw MalformedCpe("dangling escape in attribute value '" + std::string(stored) + "'");
            units.push_back({stored[++i], false});
        } else if (c == '*' || c == '?') {
            units.push_back({c, true});
        } else {
            units.push_back({c, false});
        }
    }
    return units;
}

std::string stored_of_units(const std::vector<Unit>& units)
{
    std::string out;
    out.reserve(units.size());
    for (const auto& u : units) {
        if (!u.meta && (u.ch == '*' || u.ch == '?' || u.ch == '\\'))
            out.push_back('\\');
        out.push_back(u.ch);
    }
    return out;
}

// Wildcards may only form a homogeneous run at the start and/or the end of a
// value: a single `*` or one or more `?`.
void check_wildcard_placement(const std::vector<Unit>& units, std::string_view shown)
{
    const auto bad = [&](const char* why) {
        throw MalformedCpe("illegal wildcard placement in '" + std::string(shown) + "': " + why);
    };

    std::size_t lead = 0;
    while (lead < units.size() && units[lead].meta)
        ++lead;
    std::size_t trail = 0;
    if (lead < units.size()) {
        while (trail < units.size() - lead && units[units.size() - 1 - trail].meta)
            ++trail;
    }
    for (std::size_t i = lead; i + trail < units.size(); ++i) {
        if (units[i].meta)
            bad("wildcard inside value");
    }

    const auto check_run = [&](std::size_t from, std::size_t len) {
        if (len == 0)
            return;
        const char first = units[from].ch;
        for (std::size_t i = from; i < from + len; ++i) {
            if (units[i].ch != first)
                bad("mixed '*' and '?' run");
        }
        if (first == '*' && len > 1)
            bad("repeated '*'");
    };
    check_run(0, lead);
    check_run(units.size() - trail, trail);

    if (lead == units.size() && units.front().ch == '*')
        bad("a value made only of '*' is the logical value ANY");
}

struct Pattern
{
    char lead_kind = 0; // 0, '*' or '?'
    std::size_t lead_len = 0;
    std::string core;   // case-folded literal characters
    char trail_kind = 0;
    std::size_t trail_len = 0;
};

Pattern pattern_of(const std::vector<Unit>& units)
{
    Pattern p;
    std::size_t i = 0;
    while (i < units.size() && units[i].meta) {
        p.lead_kind = units[i].ch;
        ++p.lead_len;
        ++i;
    }
    std::size_t end = units.size();
    while (end > i && units[end - 1].meta) {
        p.trail_kind = units[end - 1].ch;
        ++p.trail_len;
        --end;
    }
    for (; i < end; ++i)
        p.core.push_back(fold(units[i].ch));
    return p;
}

bool wildcard_matches(const Pattern& p, std::string_view text)
{
    std::string folded(text);
    std::transform(folded.begin(), folded.end(), folded.begin(), fold);
    const std::size_t n = folded.size();

    const auto start_ok = [&](std::size_t pos) {
        if (p.lead_kind == '*')
            return true;
        return pos == p.lead_len; // '?' run or no lead at all (lead_len == 0)
    };
    const auto end_ok = [&](std::size_t end) {
        if (p.trail_kind == '*')
            return end <= n;
        return n >= end && n - end == p.trail_len;
    };

    if (p.core.empty()) {
        // Only possible for a pure '?' run.
        return n == p.lead_len + p.trail_len;
    }
    for (std::size_t pos = folded.find(p.core); pos != std::string::npos; pos = folded.find(p.core, pos + 1)) {
        if (start_ok(pos) && end_ok(pos + p.core.size()))
            return true;
    }
    return false;
}

bool fs_plain(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

std::vector<std::string_view> split_fs(std::string_view body)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] == '\\') {
            ++i;
            continue;
        }
        if (body[i] == ':') {
            fields.push_back(body.substr(start, i - start));
            start = i + 1;
        }
    }
    fields.push_back(body.substr(start));
    return fields;
}

CpeAttribute attribute_of_token(std::string_view token)
{
    if (token.empty() || token == "*")
        return CpeAttribute::any();
    if (token == "-")
        return CpeAttribute::na();
    return CpeAttribute::literal(std::string(token));
}

std::string token_of_attribute(const CpeAttribute& attr)
{
    if (attr.is_any())
        return "*";
    if (attr.is_na())
        return "-";
    const auto units = units_of_stored(attr.value());
    if (units.size() == 1 && !units[0].meta && units[0].ch == '-')
        return "\\-";
    std::string out;
    for (const auto& u : units) {
        if (!u.meta && !fs_plain(u.ch))
            out.push_back('\\');
        out.push_back(u.ch);
    }
    return out;
}

} // namespace

CpeAttribute CpeAttribute::na()
{
    CpeAttribute a;
    a.kind_ = Kind::Na;
    return a;
}

CpeAttribute CpeAttribute::literal(std::string stored)
{
    const auto units = units_of_stored(stored);
    if (units.empty())
        throw MalformedCpe("empty literal attribute value");
    check_wildcard_placement(units, stored);
    CpeAttribute a;
    a.kind_ = Kind::Literal;
    a.value_ = stored_of_units(units);
    return a;
}

CpeAttribute CpeAttribute::plain(std::string_view text)
{
    std::vector<Unit> units;
    for (char c : text)
        units.push_back({c, false});
    if (units.empty())
        throw MalformedCpe("empty literal attribute value");
    CpeAttribute a;
    a.kind_ = Kind::Literal;
    a.value_ = stored_of_units(units);
    return a;
}

bool CpeAttribute::has_wildcards() const noexcept
{
    if (!is_literal())
        return false;
    const auto units = units_of_stored(value_);
    return std::any_of(units.begin(), units.end(), [](const Unit& u) { return u.meta; });
}

std::string CpeAttribute::unescaped() const
{
    std::string out;
    for (const auto& u : units_of_stored(value_))
        out.push_back(u.ch);
    return out;
}

std::string_view field_name(CpeField field)
{
    static constexpr std::array<std::string_view, kCpeFieldCount> names{
        "part", "vendor", "product", "version", "update", "edition",
        "language", "sw_edition", "target_sw", "target_hw", "other"};
    return names[static_cast<std::size_t>(field)];
}

std::string_view to_string(MatchRelation rel)
{
    switch (rel) {
    case MatchRelation::Equal: return "EQUAL";
    case MatchRelation::Subset: return "SUBSET";
    case MatchRelation::Superset: return "SUPERSET";
    case MatchRelation::Disjoint: return "DISJOINT";
    }
    return "?";
}

std::vector<std::string> cpe_tokens(std::string_view formatted)
{
    constexpr std::string_view prefix = "cpe:2.3:";
    if (formatted.size() < prefix.size()
        || !std::equal(prefix.begin(), prefix.end(), formatted.begin(),
                       [](char a, char b) { return a == fold(b); }))
        throw MalformedCpe("CPE must start with 'cpe:2.3:': '" + std::string(formatted) + "'");

    const auto fields = split_fs(formatted.substr(prefix.size()));
    if (fields.size() != kCpeFieldCount)
        throw MalformedCpe("CPE must have 13 colon-separated fields, got " + std::to_string(fields.size() + 2)
                           + ": '" + std::string(formatted) + "'");
    return {fields.begin(), fields.end()};
}

Wfn parse_cpe(std::string_view formatted)
{
    const auto fields = cpe_tokens(formatted);

    Wfn wfn;
    for (std::size_t i = 0; i < kCpeFieldCount; ++i) {
        try {
            wfn.attributes[i] = attribute_of_token(fields[i]);
        } catch (const MalformedCpe& e) {
            throw MalformedCpe(std::string(field_name(static_cast<CpeField>(i))) + ": " + e.what());
        }
    }

    const auto& part = wfn[CpeField::part];
    if (part.is_literal()) {
        const std::string v = part.unescaped();
        if (part.has_wildcards() || v.size() != 1 || (fold(v[0]) != 'a' && fold(v[0]) != 'o' && fold(v[0]) != 'h'))
            throw MalformedCpe("part must be one of a, o, h: '" + std::string(formatted) + "'");
    }
    return wfn;
}

std::string format_cpe(const Wfn& wfn)
{
    std::string out = "cpe:2.3";
    for (const auto& attr : wfn.attributes) {
        out.push_back(':');
        out += token_of_attribute(attr);
    }
    return out;
}

MatchRelation compare_attribute(const CpeAttribute& source, const CpeAttribute& target)
{
    using K = CpeAttribute::Kind;
    if (source.kind() == K::Any)
        return target.kind() == K::Any ? MatchRelation::Equal : MatchRelation::Superset;
    if (target.kind() == K::Any)
        return MatchRelation::Subset;
    if (source.kind() == K::Na || target.kind() == K::Na)
        return source.kind() == target.kind() ? MatchRelation::Equal : MatchRelation::Disjoint;

    const auto su = units_of_stored(source.value());
    const auto tu = units_of_stored(target.value());
    const bool same = su.size() == tu.size()
        && std::equal(su.begin(), su.end(), tu.begin(), [](const Unit& a, const Unit& b) {
               return a.meta == b.meta && fold(a.ch) == fold(b.ch);
           });
    if (same)
        return MatchRelation::Equal;

    const bool s_wild = std::any_of(su.begin(), su.end(), [](const Unit& u) { return u.meta; });
    const bool t_wild = std::any_of(tu.begin(), tu.end(), [](const Unit& u) { return u.meta; });
    if (s_wild && !t_wild && wildcard_matches(pattern_of(su), target.unescaped()))
        return MatchRelation::Superset;
    if (t_wild && !s_wild && wildcard_matches(pattern_of(tu), source.unescaped()))
        return MatchRelation::Subset;
    return MatchRelation::Disjoint;
}

bool cpe_names_match(const Wfn& component, const Wfn& criterion, NaVersionPolicy policy)
{
    for (std::size_t i = 0; i < kCpeFieldCount; ++i) {
        CpeAttribute target = component.attributes[i];
        if (policy == NaVersionPolicy::TreatNaVersionAsUnknown
            && static_cast<CpeField>(i) == CpeField::version && target.is_na())
            target = CpeAttribute::any();
        if (compare_attribute(criterion.attributes[i], target) == MatchRelation::Disjoint)
            return false;
    }
    return true;
}

} // namespace svstest::identifiers
