#include "lsvbrw/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "lsvbrw/error.hpp"

namespace lsv {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 initialisation failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

ArtifactDir::ArtifactDir(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

void ArtifactDir::write_text(const std::string& name, const std::string& content) {
  std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + (dir_ / name).string());
  out << content;
  if (std::find(names_.begin(), names_.end(), name) == names_.end()) names_.push_back(name);
}

void ArtifactDir::write_json(const std::string& name, const nlohmann::json& j) {
  write_text(name, j.dump(2) + "\n");
}

void ArtifactDir::write_manifest() const {
  std::vector<std::string> names = names_;
  std::sort(names.begin(), names.end());
  std::ofstream out(dir_ / "manifest.txt", std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write manifest in " + dir_.string());
  for (const auto& n : names) out << sha256_file(dir_ / n) << "  " << n << "\n";
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), r.ptr);
}

}  // namespace lsv
