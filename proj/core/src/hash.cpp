#include "pmltm/hash.hpp"

#include <array>
#include <fstream>

#include <openssl/evp.h>

#include "pmltm/error.hpp"

namespace pmltm {
namespace {

class Digest {
public:
    Digest() : ctx_(EVP_MD_CTX_new()) {
        if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
            throw Error("sha256: digest initialisation failed");
    }
    ~Digest() { EVP_MD_CTX_free(ctx_); }
    Digest(const Digest&) = delete;
    Digest& operator=(const Digest&) = delete;

    void update(const char* data, std::size_t size) {
        if (EVP_DigestUpdate(ctx_, data, size) != 1) throw Error("sha256: update failed");
    }

    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_, out.data(), &len) != 1) throw Error("sha256: final failed");
        static constexpr char kHex[] = "0123456789abcdef";
        std::string s;
        s.reserve(2 * len);
        for (unsigned int k = 0; k < len; ++k) {
            s.push_back(kHex[out[k] >> 4]);
            s.push_back(kHex[out[k] & 0xF]);
        }
        return s;
    }

private:
    EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256Hex(std::string_view bytes) {
    Digest d;
    d.update(bytes.data(), bytes.size());
    return d.hex();
}

std::string sha256File(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    Digest d;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return d.hex();
}

}  // namespace pmltm
