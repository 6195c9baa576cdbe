#include "qudio/dataset.hpp"

#ifdef QUDIO_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <fstream>

namespace qudio {

namespace {

struct Mirror {
    std::string host;
    std::string prefix;
};

const Mirror kMirrors[] = {
    {"ossci-datasets.s3.amazonaws.com", "/mnist/"},
    {"storage.googleapis.com", "/cvdf-datasets/mnist/"},
};

const char* kFiles[] = {
    "train-images-idx3-ubyte.gz",
    "train-labels-idx1-ubyte.gz",
    "t10k-images-idx3-ubyte.gz",
    "t10k-labels-idx1-ubyte.gz",
};

#ifdef QUDIO_HAVE_OPENSSL
constexpr const char* kScheme = "https://";
#else
constexpr const char* kScheme = "http://"; // mirrors may redirect to TLS and fail
#endif

bool download_one(const Mirror& mirror, const std::string& file,
                  const std::filesystem::path& dest) {
    httplib::Client client(kScheme + mirror.host);
    client.set_follow_location(true);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);
    auto res = client.Get(mirror.prefix + file);
    if (!res || res->status != 200 || res->body.empty()) return false;
    // gzip magic guards against captive portals handing back HTML
    if (res->body.size() < 2 || std::uint8_t(res->body[0]) != 0x1f ||
        std::uint8_t(res->body[1]) != 0x8b)
        return false;
    std::ofstream out(dest, std::ios::binary);
    out.write(res->body.data(), std::streamsize(res->body.size()));
    return bool(out);
}

} // namespace

bool fetch_mnist(const std::filesystem::path& dir, std::string& err) {
    std::filesystem::create_directories(dir);
    for (const char* file : kFiles) {
        const std::filesystem::path dest = dir / file;
        std::filesystem::path raw = dest;
        raw.replace_extension(); // strip .gz
        if (std::filesystem::exists(dest) || std::filesystem::exists(raw)) continue;
        bool ok = false;
        for (const Mirror& mirror : kMirrors) {
            if (download_one(mirror, file, dest)) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            err = "could not download " + std::string(file) +
                  " from any mirror; place the MNIST IDX files in " + dir.string() + " manually";
            return false;
        }
    }
    return true;
}

} // namespace qudio
