namespace tfns { namespace detail { int cli_stub = 0; } }
