#include "cakesim/packet.hpp"

#include <cstdio>
#include <stdexcept>

namespace cakesim {

std::string IpAddr::to_string() const {
    char buf[64];
    if (len == 4) {
        std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", bytes[0], bytes[1], bytes[2],
                      bytes[3]);
        return buf;
    }
    std::string out;
    for (int i = 0; i < 16; i += 2) {
        std::snprintf(buf, sizeof(buf), "%02x%02x", bytes[i], bytes[i + 1]);
        if (i) out.push_back(':');
        out += buf;
    }
    return out;
}

IpAddr parse_ip(const std::string& s) {
    if (s.find(':') != std::string::npos) {
        // Full-form IPv6 only: eight 16-bit hex groups.
        std::array<uint8_t, 16> b{};
        int group = 0;
        size_t pos = 0;
        while (group < 8) {
            size_t next = s.find(':', pos);
            std::string part =
                next == std::string::npos ? s.substr(pos) : s.substr(pos, next - pos);
            if (part.empty() || part.size() > 4)
                throw std::invalid_argument("bad IPv6 address: " + s);
            unsigned v = std::stoul(part, nullptr, 16);
            b[group * 2] = uint8_t(v >> 8);
            b[group * 2 + 1] = uint8_t(v & 0xff);
            ++group;
            if (next == std::string::npos) break;
            pos = next + 1;
        }
        if (group != 8) throw std::invalid_argument("bad IPv6 address: " + s);
        return IpAddr::v6(b);
    }
    unsigned a, b, c, d;
    char tail;
    if (std::sscanf(s.c_str(), "%u.%u.%u.%u%c", &a, &b, &c, &d, &tail) != 4 ||
        a > 255 || b > 255 || c > 255 || d > 255)
        throw std::invalid_argument("bad IPv4 address: " + s);
    return IpAddr::v4(uint8_t(a), uint8_t(b), uint8_t(c), uint8_t(d));
}

} // namespace cakesim
