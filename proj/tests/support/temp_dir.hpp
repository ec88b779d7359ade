#pragma once

#include <filesystem>
#include <string>

namespace tradediff::testing {

/// A scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& name)
        : path_(std::filesystem::temp_directory_path() / ("tradediff_" + name)) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& child = "") const { return (path_ / child).string(); }

private:
    std::filesystem::path path_;
};

}  // namespace tradediff::testing
