"""Chat, retrieval, scripted and oracle backends."""
