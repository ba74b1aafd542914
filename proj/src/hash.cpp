#include "pointprompt/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace pointprompt {

std::string sha256_hex(const void* data, std::size_t len) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int digest_len = 0;
    if (EVP_Digest(data, len, digest.data(), &digest_len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256: EVP_Digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * digest_len);
    for (unsigned int i = 0; i < digest_len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

std::string parameter_digest(const Parameter& p) {
    std::string buf = p.name;
    buf.push_back('\0');
    const ArrayX& v = p.tensor.values();
    buf.append(reinterpret_cast<const char*>(v.data()), sizeof(Scalar) * v.size());
    return sha256_hex(buf);
}

}  // namespace pointprompt
