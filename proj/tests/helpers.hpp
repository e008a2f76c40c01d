#pragma once

#include <filesystem>
#include <fstream>
#include <string>

namespace finsent::testing {

// Scratch directory under the system temp root, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        root_ = std::filesystem::temp_directory_path() /
                ("finsent_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::create_directories(root_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(root_, ec);
    }

    std::string path(const std::string& name) const { return (root_ / name).string(); }

    std::string write(const std::string& name, const std::string& content) const {
        const std::string p = path(name);
        std::ofstream f(p, std::ios::binary);
        f << content;
        return p;
    }

private:
    std::filesystem::path root_;
};

}  // namespace finsent::testing
