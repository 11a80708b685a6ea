#include "blendrec/common.hpp"

#include <cstdio>

namespace blendrec {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h)
{
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view component, std::uint64_t index)
{
    return splitmix64(splitmix64(base ^ fnv1a(component)) + index);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view component, std::uint64_t index,
                          std::uint64_t sub_index)
{
    return splitmix64(derive_seed(base, component, index) + sub_index);
}

std::string hex_digest(std::uint64_t h)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace blendrec
