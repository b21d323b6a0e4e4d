#include "svstest/identifiers/purl.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

namespace svstest::identifiers {

namespace {

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

int hex_value(char c)
{
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}

std::string percent_decode(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '%') {
            out.push_back(s[i]);
            continue;
        }
        if (i + 2 >= s.size())
            throw MalformedPurl("truncated percent-encoding in '" + std::string(s) + "'");
        const int hi = hex_value(s[i + 1]);
        const int lo = hex_value(s[i + 2]);
        if (hi < 0 || lo < 0)
            throw MalformedPurl("invalid percent-encoding in '" + std::string(s) + "'");
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
    }
    return out;
}

bool unreserved(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' || c == '_' || c == '~' || c == ':';
}

std::string percent_encode(std::string_view s)
{
    static constexpr char digits[] = "0123456789ABCDEF";
    std::string out;
    for (char c : s) {
        if (unreserved(c)) {
            out.push_back(c);
        } else {
            const auto b = static_cast<unsigned char>(c);
            out.push_back('%');
            out.push_back(digits[b >> 4]);
            out.push_back(digits[b & 0xF]);
        }
    }
    return out;
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

std::string_view strip_slashes(std::string_view s)
{
    while (!s.empty() && s.front() == '/')
        s.remove_prefix(1);
    while (!s.empty() && s.back() == '/')
        s.remove_suffix(1);
    return s;
}

bool valid_type(std::string_view t)
{
    if (t.empty() || std::isdigit(static_cast<unsigned char>(t.front())))
        return false;
    return std::all_of(t.begin(), t.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '+' || c == '-';
    });
}

bool valid_qualifier_key(std::string_view k)
{
    return !k.empty() && std::all_of(k.begin(), k.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_';
    });
}

std::optional<std::string> parse_subpath(std::string_view raw)
{
    std::string out;
    for (auto seg : split(strip_slashes(raw), '/')) {
        if (seg.empty() || seg == "." || seg == "..")
            continue;
        if (!out.empty())
            out.push_back('/');
        out += percent_decode(seg);
    }
    if (out.empty())
        return std::nullopt;
    return out;
}

} // namespace

Purl parse_purl(std::string_view input)
{
    const std::string shown(input);
    std::string_view rest = input;

    std::optional<std::string> subpath;
    if (const auto hash = rest.rfind('#'); hash != std::string_view::npos) {
        subpath = parse_subpath(rest.substr(hash + 1));
        rest = rest.substr(0, hash);
    }

    std::map<std::string, std::string> qualifiers;
    if (const auto q = rest.rfind('?'); q != std::string_view::npos) {
        for (auto pair : split(rest.substr(q + 1), '&')) {
            if (pair.empty())
                continue;
            const auto eq = pair.find('=');
            if (eq == std::string_view::npos)
                throw MalformedPurl("qualifier without '=' in '" + shown + "'");
            const std::string key = lower(pair.substr(0, eq));
            if (!valid_qualifier_key(key))
                throw MalformedPurl("invalid qualifier key '" + key + "' in '" + shown + "'");
            std::string value = percent_decode(pair.substr(eq + 1));
            if (!value.empty())
                qualifiers[key] = std::move(value);
        }
        rest = rest.substr(0, q);
    }

    const auto colon = rest.find(':');
    if (colon == std::string_view::npos || lower(rest.substr(0, colon)) != "pkg")
        throw MalformedPurl("purl must start with 'pkg:': '" + shown + "'");
    rest = strip_slashes(rest.substr(colon + 1));

    const auto slash = rest.find('/');
    if (slash == std::string_view::npos)
        throw MalformedPurl("purl has no name: '" + shown + "'");
    Purl purl;
    purl.type = lower(rest.substr(0, slash));
    if (!valid_type(purl.type))
        throw MalformedPurl("invalid purl type '" + purl.type + "' in '" + shown + "'");
    rest = strip_slashes(rest.substr(slash + 1));

    // An '@' before the last '/' belongs to the namespace (e.g. npm scopes).
    const auto last_slash = rest.rfind('/');
    const auto at = rest.rfind('@');
    if (at != std::string_view::npos && (last_slash == std::string_view::npos || at > last_slash)) {
        std::string version = percent_decode(rest.substr(at + 1));
        if (!version.empty())
            purl.version = std::move(version);
        rest = rest.substr(0, at);
    }

    const auto name_sep = rest.rfind('/');
    purl.name = percent_decode(name_sep == std::string_view::npos ? rest : rest.substr(name_sep + 1));
    if (purl.name.empty())
        throw MalformedPurl("purl has no name: '" + shown + "'");

    if (name_sep != std::string_view::npos) {
        std::string ns;
        for (auto seg : split(rest.substr(0, name_sep), '/')) {
            if (seg.empty())
                continue;
            if (!ns.empty())
                ns.push_back('/');
            ns += percent_decode(seg);
        }
        if (!ns.empty())
            purl.namespace_ = std::move(ns);
    }

    purl.qualifiers = std::move(qualifiers);
    purl.subpath = std::move(subpath);
    return purl;
}

std::string canonicalize_purl(const Purl& purl)
{
    std::string out = "pkg:" + lower(purl.type) + "/";
    if (purl.namespace_) {
        for (auto seg : split(*purl.namespace_, '/')) {
            if (seg.empty())
                continue;
            out += percent_encode(seg);
            out.push_back('/');
        }
    }
    out += percent_encode(purl.name);
    if (purl.version)
        out += "@" + percent_encode(*purl.version);
    if (!purl.qualifiers.empty()) {
        char sep = '?';
        for (const auto& [k, v] : purl.qualifiers) {
            if (v.empty())
                continue;
            out.push_back(sep);
            out += lower(k) + "=" + percent_encode(v);
            sep = '&';
        }
    }
    if (purl.subpath) {
        std::string sub;
        for (auto seg : split(*purl.subpath, '/')) {
            if (seg.empty() || seg == "." || seg == "..")
                continue;
            if (!sub.empty())
                sub.push_back('/');
            sub += percent_encode(seg);
        }
        if (!sub.empty())
            out += "#" + sub;
    }
    return out;
}

Purl coordinates_of(const Purl& purl)
{
    Purl c;
    c.type = purl.type;
    c.namespace_ = purl.namespace_;
    c.name = purl.name;
    return c;
}

bool purl_coordinates_match(const Purl& component, const Purl& criterion)
{
    if (lower(component.type) != lower(criterion.type))
        return false;
    if (component.namespace_.has_value() != criterion.namespace_.has_value())
        return false;
    if (component.namespace_ && lower(*component.namespace_) != lower(*criterion.namespace_))
        return false;
    return lower(component.name) == lower(criterion.name);
}

} // namespace svstest::identifiers
