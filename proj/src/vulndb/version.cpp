#include "svstest/vulndb.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

namespace svstest::vulndb {

namespace {

std::vector<std::string_view> segments(std::string_view v)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= v.size(); ++i) {
        if (i == v.size() || v[i] == '.' || v[i] == '-') {
            out.push_back(v.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

bool numeric(std::string_view s)
{
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::weak_ordering compare_numeric(std::string_view a, std::string_view b)
{
    const auto strip = [](std::string_view s) {
        const auto nz = s.find_first_not_of('0');
        return nz == std::string_view::npos ? std::string_view{} : s.substr(nz);
    };
    a = strip(a);
    b = strip(b);
    if (a.size() != b.size())
        return a.size() <=> b.size();
    return a.compare(b) <=> 0;
}

std::weak_ordering compare_text(std::string_view a, std::string_view b)
{
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto ca = std::tolower(static_cast<unsigned char>(a[i]));
        const auto cb = std::tolower(static_cast<unsigned char>(b[i]));
        if (ca != cb)
            return ca <=> cb;
    }
    return a.size() <=> b.size();
}

} // namespace

std::weak_ordering compare_versions(std::string_view a, std::string_view b)
{
    const auto sa = segments(a);
    const auto sb = segments(b);
    const std::size_t n = std::min(sa.size(), sb.size());
    for (std::size_t i = 0; i < n; ++i) {
        const bool na = numeric(sa[i]);
        const bool nb = numeric(sb[i]);
        std::weak_ordering c = std::weak_ordering::equivalent;
        if (na && nb)
            c = compare_numeric(sa[i], sb[i]);
        else if (na != nb)
            c = na ? std::weak_ordering::greater : std::weak_ordering::less;
        else
            c = compare_text(sa[i], sb[i]);
        if (c != 0)
            return c;
    }
    if (sa.size() == sb.size())
        return std::weak_ordering::equivalent;
    if (sa.size() > sb.size())
        return numeric(sa[n]) ? std::weak_ordering::greater : std::weak_ordering::less;
    return numeric(sb[n]) ? std::weak_ordering::less : std::weak_ordering::greater;
}

bool VersionRange::contains(std::string_view version) const
{
    if (!introduced.empty() && introduced != "0" && compare_versions(version, introduced) < 0)
        return false;
    if (fixed)
        return compare_versions(version, *fixed) < 0;
    if (last_affected)
        return compare_versions(version, *last_affected) <= 0;
    return true;
}

} // namespace svstest::vulndb
