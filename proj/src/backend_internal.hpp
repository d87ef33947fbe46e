#pragma once

#include "medbench/backend.hpp"

namespace medbench::backends::detail {

std::unique_ptr<Backend> make_chat_llm_backend(BackendConfig config, std::string credential);
std::unique_ptr<Backend> make_local_server_backend(BackendConfig config);

}  // namespace medbench::backends::detail
