#include "singlab/cli/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <memory>

#include <openssl/evp.h>

#include "json.hpp"
#include "singlab/types.hpp"

namespace singlab::cli {

std::string sha256_hex(const std::string& bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
        throw NumericError("sha256: digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["run_id"] = run_id;
    j["timestamp"] = timestamp;
    j["config"] = {{"path", config_path}, {"sha256", config_digest}};
    j["seed"] = seed;
    j["tool_version"] = tool_version;
    j["experiments"] = nlohmann::ordered_json::array();
    for (const ExperimentRecord& e : experiments) {
        j["experiments"].push_back({{"name", e.name},
                                    {"kind", e.kind},
                                    {"system", e.system},
                                    {"verdict", e.verdict},
                                    {"summary", e.summary},
                                    {"outputs", e.outputs}});
    }
    return j.dump(2) + "\n";
}

}  // namespace singlab::cli
