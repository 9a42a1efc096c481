namespace tfns { namespace detail { int config_stub = 0; } }
