#pragma once

// Configuration, validation and artifact bookkeeping for the fslab command
// line tool. A configuration is a flat set of key=value pairs; values from
// the command line win over a config file, which wins over the defaults.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fslab/case1.h"
#include "fslab/experiments.h"

namespace fslab::cli {

enum class Verb { kExp1, kExp2, kConstructStable, kVerify, kProbe };

std::string_view to_string(Verb v);
// Throws ParameterError for an unknown verb.
Verb parse_verb(std::string_view name);

using Values = std::map<std::string, std::string>;

// Every key the verb understands, with its default.
Values defaults(Verb verb);

// Reads "key = value" lines; '#' starts a comment. Throws ParameterError
// naming the source and line of a malformed entry.
Values parse_key_values(std::istream& in, const std::string& source);

struct Config {
  Verb verb = Verb::kExp1;
  Values values;

  const std::string& get(const std::string& key) const;
};

// defaults < file < command line. Unknown keys in the file or on the
// command line throw ParameterError.
Config resolve(Verb verb, const Values& file, const Values& command_line);

// Every violated precondition as "key: constraint". Empty means the config
// can run.
std::vector<std::string> validate(const Config& config);

// Sorted key=value lines, the input to the config hash. The output
// directory is left out so a run can be replayed elsewhere.
std::string canonical(const Config& config);
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

// Typed views. Call only after validate() returned no violations.
case1::Problem problem_of(const Config& config);
Exp1Config exp1_of(const Config& config);
Exp2Config exp2_of(const Config& config);

// manifest.txt in `dir`: verb, config hash, seed, status, every config
// value but "out" and the SHA-256 of every listed file (paths relative to dir).
void write_manifest(const std::filesystem::path& dir, const Config& config,
                    const std::vector<std::string>& files, bool complete);
// Recomputes every file checksum listed in dir/manifest.txt. Returns the
// problems found; empty when all files match.
std::vector<std::string> check_manifest(const std::filesystem::path& dir);

// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitCheckFailed = 4;

// Validates, then runs the verb, writing artifacts under config "out".
// Progress and errors go to `log`.
int run(const Config& config, std::ostream& log);

}  // namespace fslab::cli
