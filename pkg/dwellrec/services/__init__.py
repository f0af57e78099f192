"""Services: embedding store, remote client, log I/O, training and evaluation runners."""
