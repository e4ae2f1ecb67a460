"""Test package for YOVA - Your Own Voice Assistant.""" 