"""Runner package"""
