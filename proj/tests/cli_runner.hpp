#pragma once

// Spawns the installed CLI binary (path injected by the build as
// TRIFUN_CLI_PATH) and captures exit code, stdout and stderr through
// files in a per-process temp directory.

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <string>
#include <sys/wait.h>

namespace clirun {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

inline const std::string& work_dir() {
    static const std::string dir = [] {
        char tmpl[] = "/tmp/trifun-cli-XXXXXX";
        const char* made = mkdtemp(tmpl);
        if (made == nullptr) std::abort();
        return std::string(made);
    }();
    return dir;
}

inline std::string write_fixture(const std::string& name, const std::string& text) {
    const std::string path = work_dir() + "/" + name;
    std::ofstream(path) << text;
    return path;
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline RunResult run_cli(const std::string& args, const std::string& stdin_text = "") {
    const std::string out_path = work_dir() + "/out";
    const std::string err_path = work_dir() + "/err";
    std::string cmd = std::string(TRIFUN_CLI_PATH) + " " + args;
    if (!stdin_text.empty()) {
        const std::string in_path = work_dir() + "/in";
        std::ofstream(in_path) << stdin_text;
        cmd += " < " + in_path;
    } else {
        cmd += " < /dev/null";
    }
    cmd += " > " + out_path + " 2> " + err_path;
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

}  // namespace clirun
