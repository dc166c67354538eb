#pragma once

#include <stdexcept>
#include <string>

namespace s2r {

/// Pipeline stage an error originated in. The numeric value is the CLI exit code.
enum class Stage : int {
    general = 1,
    config = 2,
    browser = 10,
    llm = 20,
    tts = 30,
    mux = 40,
};

class Error : public std::runtime_error {
public:
    Error(Stage stage, const std::string& what) : std::runtime_error(what), stage_(stage) {}

    [[nodiscard]] Stage stage() const noexcept { return stage_; }
    [[nodiscard]] int exit_code() const noexcept { return static_cast<int>(stage_); }

private:
    Stage stage_;
};

/// Timeline arithmetic that cannot be carried out (e.g. distance in zero time).
class TimingError : public Error {
public:
    explicit TimingError(const std::string& what) : Error(Stage::config, what) {}
};

}  // namespace s2r
