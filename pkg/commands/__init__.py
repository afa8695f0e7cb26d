# needs to exist - can be empty
