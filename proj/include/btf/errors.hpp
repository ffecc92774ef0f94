#ifndef BTF_ERRORS_HPP
#define BTF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace btf {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

class dimension_mismatch : public error {
public:
    explicit dimension_mismatch(const std::string& what) : error(what) {}
};

class length_mismatch : public error {
public:
    explicit length_mismatch(const std::string& what) : error(what) {}
};

class width_mismatch : public error {
public:
    explicit width_mismatch(const std::string& what) : error(what) {}
};

class exhausted_public_key : public error {
public:
    explicit exhausted_public_key(const std::string& what) : error(what) {}
};

class unsupported_level : public error {
public:
    explicit unsupported_level(const std::string& what) : error(what) {}
};

class invalid_params : public error {
public:
    explicit invalid_params(const std::string& what) : error(what) {}
};

class missing_key : public error {
public:
    explicit missing_key(const std::string& what) : error(what) {}
};

class no_template : public error {
public:
    explicit no_template(const std::string& what) : error(what) {}
};

class channel_violation : public error {
public:
    explicit channel_violation(const std::string& what) : error(what) {}
};

class incomplete_run : public error {
public:
    explicit incomplete_run(const std::string& what) : error(what) {}
};

class parse_error : public error {
public:
    explicit parse_error(const std::string& what) : error(what) {}
};

}  // namespace btf

#endif
