#include "conceptlens/provenance.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <sstream>

#include "jsonl.hpp"

namespace conceptlens {

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error(ErrorCode::kIoError, "sha256 init failed");
    }
  }

  void update(std::string_view data) { EVP_DigestUpdate(ctx_.get(), data.data(), data.size()); }

  void update_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kMissingFile, path.string());
    std::array<char, 1 << 16> buf;
    while (in) {
      in.read(buf.data(), buf.size());
      update({buf.data(), static_cast<std::size_t>(in.gcount())});
    }
  }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), digest.data(), &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(kHex[digest[i] >> 4]);
      out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view data) {
  Sha256 h;
  h.update(data);
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  Sha256 h;
  h.update_file(path);
  return h.hex();
}

std::string instance_space_hash(const Dataset& dataset) {
  Sha256 h;
  std::string row;
  for (const auto& tok : dataset.tokens()) {
    row = std::to_string(tok.global_index) + '\t' + std::to_string(tok.sentence_index) + '\t' +
          std::to_string(tok.token_index) + '\t' + tok.surface + '\n';
    h.update(row);
  }
  return h.hex();
}

std::string dataset_hash(const Dataset& dataset) {
  Sha256 h;
  h.update(instance_space_hash(dataset));
  for (const auto& s : dataset.sentences()) {
    h.update(std::to_string(s.sentence_index) + '\t' + s.text + '\t' + (s.label ? *s.label : std::string("\x01")) +
             '\n');
  }
  for (const auto& [task, set] : dataset.annotations()) {
    h.update(task + '\n');
    for (const auto& tag : set.tags) h.update(tag + '\n');
  }
  for (const auto& info : dataset.layers()) {
    h.update("layer " + std::to_string(info.layer_id) + '\n');
    h.update_file(info.path);
  }
  return h.hex();
}

std::string Provenance::json_line() const {
  detail::json body{{"tool", kToolName}, {"version", kToolVersion}, {"config_hash", config_hash},
                    {"dataset_hash", dataset_hash}};
  for (const auto& [k, v] : extra) body[k] = v;
  return detail::json{{"provenance", body}}.dump();
}

std::string Provenance::csv_comment() const {
  std::ostringstream out;
  out << "# provenance: tool=" << kToolName << " version=" << kToolVersion << " config_hash=" << config_hash
      << " dataset_hash=" << dataset_hash;
  for (const auto& [k, v] : extra) out << ' ' << k << '=' << v;
  return out.str();
}

}  // namespace conceptlens
